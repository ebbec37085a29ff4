//! Versioned line-oriented model format.
//!
//! ```text
//! gravzone-model v1
//! kind rf
//! ...
//! tree <n_nodes>
//! S <feature> <threshold> <left> <right> <count0> <count1>
//! L <count0> <count1>
//! ```
//!
//! Floats are written in shortest round-trip form so a parse reproduces
//! the model bit for bit.

use super::boost::{BoostKind, BoostModel, WeakLearner};
use super::forest::TrainedForest;
use super::svm::LinearSvmModel;
use super::tree::{DecisionTree, Node, RegNode, RegressionTree, TreeParams};
use super::{ForestParams, LearnError, Model};
use std::fmt::Write as _;

pub const MODEL_HEADER: &str = "gravzone-model v1";

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |d| d.to_string())
}

fn write_tree(out: &mut String, t: &DecisionTree) {
    let _ = writeln!(out, "tree {} {}", t.nodes.len(), join(&t.importances));
    for n in &t.nodes {
        let _ = match n {
            Node::Split {
                feature,
                threshold,
                left,
                right,
                counts,
            } => {
                writeln!(
                    out,
                    "S {feature} {threshold} {left} {right} {} {}",
                    counts[0], counts[1]
                )
            }
            Node::Leaf { counts } => writeln!(out, "L {} {}", counts[0], counts[1]),
        };
    }
}

fn write_rtree(out: &mut String, t: &RegressionTree) {
    let _ = writeln!(out, "rtree {}", t.nodes.len());
    for n in &t.nodes {
        let _ = match n {
            RegNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                writeln!(out, "S {feature} {threshold} {left} {right}")
            }
            RegNode::Leaf { value } => writeln!(out, "V {value}"),
        };
    }
}

pub fn model_to_text(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = writeln!(out, "kind {}", model.kind_name());
    let _ = writeln!(out, "n_features {}", model.n_features());
    match model {
        Model::Forest(f) => {
            let p = &f.params;
            let _ = writeln!(
                out,
                "params {} {} {} {} {}",
                p.n_trees,
                opt(p.tree.max_depth),
                p.tree.min_samples_split,
                opt(p.tree.mtry),
                p.bootstrap
            );
            let _ = writeln!(out, "seed {}", f.seed);
            let _ = writeln!(
                out,
                "importances {} {}",
                f.importance_degenerate,
                join(&f.importances)
            );
            for t in &f.trees {
                write_tree(&mut out, t);
            }
        }
        Model::Boost(b) => {
            let _ = writeln!(out, "init {}", b.init);
            let _ = writeln!(out, "train_loss {}", join(&b.train_loss));
            let _ = writeln!(out, "stages {}", b.stages.len());
            for (learner, weight) in &b.stages {
                let _ = writeln!(out, "stage {weight}");
                match learner {
                    WeakLearner::Stump(t) => write_tree(&mut out, t),
                    WeakLearner::Regression(t) => write_rtree(&mut out, t),
                }
            }
        }
        Model::Svm(s) => {
            let _ = writeln!(out, "lambda {}", s.lambda);
            let _ = writeln!(out, "bias {}", s.b);
            let _ = writeln!(out, "w {}", join(&s.w));
        }
        Model::Baseline { label, .. } => {
            let _ = writeln!(out, "label {label}");
        }
    }
    out
}

struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Reader { lines, pos: 0 }
    }

    fn line_no(&self) -> usize {
        self.lines
            .get(self.pos)
            .map_or_else(|| self.lines.last().map_or(1, |l| l.0 + 1), |l| l.0)
    }

    fn err(&self, reason: impl Into<String>) -> LearnError {
        LearnError::Parse {
            line: self.line_no(),
            reason: reason.into(),
        }
    }

    /// Next line split into tokens, requiring the first token to be `tag`.
    fn expect(&mut self, tag: &str) -> Result<Vec<&'a str>, LearnError> {
        let Some(&(_, line)) = self.lines.get(self.pos) else {
            return Err(self.err(format!("unexpected end of input, expected '{tag}'")));
        };
        let mut toks = line.split_whitespace();
        if toks.next() != Some(tag) {
            return Err(self.err(format!("expected '{tag}' record")));
        }
        let rest = toks.collect();
        self.pos += 1;
        Ok(rest)
    }

    fn next_tokens(&mut self) -> Result<Vec<&'a str>, LearnError> {
        let Some(&(_, line)) = self.lines.get(self.pos) else {
            return Err(self.err("unexpected end of input"));
        };
        self.pos += 1;
        Ok(line.split_whitespace().collect())
    }

    fn parse<T: std::str::FromStr>(&self, tok: Option<&&str>, what: &str) -> Result<T, LearnError> {
        let line = self
            .lines
            .get(self.pos.saturating_sub(1))
            .map_or(1, |l| l.0);
        let tok = tok.ok_or_else(|| LearnError::Parse {
            line,
            reason: format!("missing {what}"),
        })?;
        tok.parse().map_err(|_| LearnError::Parse {
            line,
            reason: format!("invalid {what} '{tok}'"),
        })
    }

    fn single<T: std::str::FromStr>(&mut self, tag: &str) -> Result<T, LearnError> {
        let toks = self.expect(tag)?;
        if toks.len() != 1 {
            return Err(LearnError::Parse {
                line: self.lines[self.pos - 1].0,
                reason: format!("'{tag}' takes one value"),
            });
        }
        self.parse(toks.first(), tag)
    }

    fn floats(&self, toks: &[&str], what: &str) -> Result<Vec<f64>, LearnError> {
        toks.iter().map(|t| self.parse(Some(t), what)).collect()
    }

    fn opt_usize(&self, tok: Option<&&str>, what: &str) -> Result<Option<usize>, LearnError> {
        if tok == Some(&"none") {
            Ok(None)
        } else {
            self.parse(tok, what).map(Some)
        }
    }
}

fn check_children(
    r: &Reader,
    n: usize,
    k: usize,
    left: usize,
    right: usize,
) -> Result<(), LearnError> {
    if left <= k || right <= k || left >= n || right >= n {
        return Err(r.err(format!("node {k} has child offsets outside ({k}, {n})")));
    }
    Ok(())
}

fn check_feature(r: &Reader, feature: usize, n_features: usize) -> Result<(), LearnError> {
    if feature >= n_features {
        return Err(r.err(format!("feature index {feature} out of range")));
    }
    Ok(())
}

fn read_tree(r: &mut Reader, n_features: usize) -> Result<DecisionTree, LearnError> {
    let head = r.expect("tree")?;
    let n: usize = r.parse(head.first(), "node count")?;
    let importances = r.floats(&head[1..], "importance")?;
    if importances.len() != n_features || n == 0 {
        return Err(r.err("tree header needs a node count and one importance per feature"));
    }
    let mut nodes = Vec::with_capacity(n);
    for k in 0..n {
        let t = r.next_tokens()?;
        let node = match t.first().copied() {
            Some("S") if t.len() == 7 => {
                let feature = r.parse(t.get(1), "feature")?;
                let (left, right) = (r.parse(t.get(3), "left")?, r.parse(t.get(4), "right")?);
                check_feature(r, feature, n_features)?;
                check_children(r, n, k, left, right)?;
                Node::Split {
                    feature,
                    threshold: r.parse(t.get(2), "threshold")?,
                    left,
                    right,
                    counts: [r.parse(t.get(5), "count")?, r.parse(t.get(6), "count")?],
                }
            }
            Some("L") if t.len() == 3 => Node::Leaf {
                counts: [r.parse(t.get(1), "count")?, r.parse(t.get(2), "count")?],
            },
            _ => {
                return Err(LearnError::Parse {
                    line: r.lines[r.pos - 1].0,
                    reason: "malformed tree node".into(),
                })
            }
        };
        nodes.push(node);
    }
    Ok(DecisionTree {
        nodes,
        n_features,
        importances,
    })
}

fn read_rtree(r: &mut Reader, n_features: usize) -> Result<RegressionTree, LearnError> {
    let n: usize = r.single("rtree")?;
    if n == 0 {
        return Err(r.err("regression tree has no nodes"));
    }
    let mut nodes = Vec::with_capacity(n);
    for k in 0..n {
        let t = r.next_tokens()?;
        let node = match t.first().copied() {
            Some("S") if t.len() == 5 => {
                let feature = r.parse(t.get(1), "feature")?;
                let (left, right) = (r.parse(t.get(3), "left")?, r.parse(t.get(4), "right")?);
                check_feature(r, feature, n_features)?;
                check_children(r, n, k, left, right)?;
                RegNode::Split {
                    feature,
                    threshold: r.parse(t.get(2), "threshold")?,
                    left,
                    right,
                }
            }
            Some("V") if t.len() == 2 => RegNode::Leaf {
                value: r.parse(t.get(1), "leaf value")?,
            },
            _ => {
                return Err(LearnError::Parse {
                    line: r.lines[r.pos - 1].0,
                    reason: "malformed regression node".into(),
                })
            }
        };
        nodes.push(node);
    }
    Ok(RegressionTree { nodes, n_features })
}

pub fn model_from_text(text: &str) -> Result<Model, LearnError> {
    let mut r = Reader::new(text);
    match r.lines.first() {
        Some(&(_, h)) if h == MODEL_HEADER => r.pos = 1,
        Some(&(line, h)) => {
            return Err(LearnError::Parse {
                line,
                reason: format!("expected header '{MODEL_HEADER}', found '{h}'"),
            })
        }
        None => {
            return Err(LearnError::Parse {
                line: 1,
                reason: "empty model file".into(),
            })
        }
    }
    let kind: String = r.single("kind")?;
    let n_features: usize = r.single("n_features")?;
    let model = match kind.as_str() {
        "rf" => {
            let p = r.expect("params")?;
            if p.len() != 5 {
                return Err(LearnError::Parse {
                    line: r.lines[r.pos - 1].0,
                    reason: "params takes five values".into(),
                });
            }
            let params = ForestParams {
                n_trees: r.parse(p.first(), "n_trees")?,
                tree: TreeParams {
                    max_depth: r.opt_usize(p.get(1), "max_depth")?,
                    min_samples_split: r.parse(p.get(2), "min_samples_split")?,
                    mtry: r.opt_usize(p.get(3), "mtry")?,
                },
                bootstrap: r.parse(p.get(4), "bootstrap")?,
            };
            let seed = r.single("seed")?;
            let imp = r.expect("importances")?;
            let importance_degenerate = r.parse(imp.first(), "degenerate flag")?;
            let importances = r.floats(&imp[1.min(imp.len())..], "importance")?;
            if importances.len() != n_features {
                return Err(r.err("importance count does not match n_features"));
            }
            let trees = (0..params.n_trees)
                .map(|_| read_tree(&mut r, n_features))
                .collect::<Result<_, _>>()?;
            Model::Forest(TrainedForest {
                trees,
                params,
                seed,
                n_features,
                importances,
                importance_degenerate,
            })
        }
        "adaboost" | "gbdt" => {
            let init = r.single("init")?;
            let loss = r.expect("train_loss")?;
            let train_loss = r.floats(&loss, "loss")?;
            let n: usize = r.single("stages")?;
            let mut stages = Vec::with_capacity(n);
            for _ in 0..n {
                let weight: f64 = r.single("stage")?;
                let learner = if kind == "adaboost" {
                    WeakLearner::Stump(read_tree(&mut r, n_features)?)
                } else {
                    WeakLearner::Regression(read_rtree(&mut r, n_features)?)
                };
                stages.push((learner, weight));
            }
            let kind = if kind == "adaboost" {
                BoostKind::AdaBoost
            } else {
                BoostKind::Gbdt
            };
            Model::Boost(BoostModel {
                kind,
                stages,
                init,
                n_features,
                train_loss,
            })
        }
        "svm" => {
            let lambda = r.single("lambda")?;
            let b = r.single("bias")?;
            let wt = r.expect("w")?;
            let w = r.floats(&wt, "weight")?;
            if w.len() != n_features {
                return Err(r.err("weight count does not match n_features"));
            }
            Model::Svm(LinearSvmModel { w, b, lambda })
        }
        "baseline" => {
            let label: u8 = r.single("label")?;
            if label > 1 {
                return Err(LearnError::LabelArityError(label));
            }
            Model::Baseline { label, n_features }
        }
        other => {
            return Err(LearnError::Parse {
                line: r.lines[r.pos - 2].0,
                reason: format!("unknown model kind '{other}'"),
            })
        }
    };
    if r.pos != r.lines.len() {
        return Err(r.err("trailing content after model"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{AdaBoostParams, GbdtParams, ModelSpec, SvmParams};
    use crate::matrix::Matrix;

    fn data() -> (Matrix, Vec<u8>) {
        let rows: Vec<[f64; 3]> = (0..60)
            .map(|i| {
                [
                    (i as f64 * 0.7).sin(),
                    (i as f64 * 0.3).cos(),
                    i as f64 / 60.0,
                ]
            })
            .collect();
        let y = rows
            .iter()
            .map(|r| (r[0] + 0.5 * r[1] > 0.2) as u8)
            .collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn round_trip_all_kinds() {
        let (x, y) = data();
        let specs = [
            ModelSpec::Rf(ForestParams {
                n_trees: 7,
                ..Default::default()
            }),
            ModelSpec::AdaBoost(AdaBoostParams { n_rounds: 8 }),
            ModelSpec::Gbdt(GbdtParams {
                n_rounds: 6,
                ..Default::default()
            }),
            ModelSpec::Svm(SvmParams::default()),
        ];
        for spec in specs {
            let m = spec.fit(&x, &y, 3).unwrap();
            let text = model_to_text(&m);
            let back = model_from_text(&text).unwrap();
            assert_eq!(back, m, "{}", m.kind_name());
            assert_eq!(model_to_text(&back), text);
        }
        let base = Model::Baseline {
            label: 1,
            n_features: 3,
        };
        assert_eq!(model_from_text(&model_to_text(&base)).unwrap(), base);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(model_from_text(""), Err(LearnError::Parse { .. })));
        assert!(matches!(
            model_from_text("gravzone-model v2\n"),
            Err(LearnError::Parse { line: 1, .. })
        ));
        let (x, y) = data();
        let m = ModelSpec::Rf(ForestParams {
            n_trees: 2,
            ..Default::default()
        })
        .fit(&x, &y, 1)
        .unwrap();
        let text = model_to_text(&m);
        let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(model_from_text(&truncated).is_err());
        let corrupted = text.replacen("\nS ", "\nS 99 ", 1);
        assert!(model_from_text(&corrupted).is_err());
    }
}
