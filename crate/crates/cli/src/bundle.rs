//! Trained-model bundle: window, scaler, optional fuser and classifier in
//! one text file, each part under a `section <name>` line.

use anyhow::{bail, Context, Result};

use gravzone_core::learners::{model_from_text, model_to_text};
use gravzone_core::pipeline::Scaler;
use gravzone_core::{AttentionFuser, Model, WindowSpec};

const HEADER: &str = "gravzone-bundle v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub window: WindowSpec,
    pub scaler: Scaler,
    pub fuser: Option<AttentionFuser>,
    pub model: Model,
}

impl Bundle {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{HEADER}\nwindow {} {}\n",
            self.window.half_m, self.window.half_n
        );
        s.push_str("section scaler\n");
        s.push_str(&self.scaler.to_text());
        if let Some(f) = &self.fuser {
            s.push_str("section fuser\n");
            s.push_str(&f.to_text());
        }
        s.push_str("section model\n");
        s.push_str(&model_to_text(&self.model));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(HEADER) {
            bail!("model bundle must start with '{HEADER}'");
        }
        let window_line = lines.next().context("bundle is missing the window line")?;
        let dims: Vec<usize> = window_line
            .strip_prefix("window ")
            .context("expected 'window <half_m> <half_n>'")?
            .split_whitespace()
            .map(|t| t.parse().with_context(|| format!("bad window size '{t}'")))
            .collect::<Result<_>>()?;
        let [half_m, half_n] = dims[..] else {
            bail!("window line needs two sizes")
        };
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in lines {
            if let Some(name) = line.strip_prefix("section ") {
                sections.push((name.trim().to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !line.trim().is_empty() {
                bail!("content before the first section: '{line}'");
            }
        }
        let take = |name: &str| {
            sections
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b.as_str())
        };
        if let Some((bad, _)) = sections
            .iter()
            .find(|(n, _)| !matches!(n.as_str(), "scaler" | "fuser" | "model"))
        {
            bail!("unknown bundle section '{bad}'");
        }
        let scaler = Scaler::from_text(take("scaler").context("bundle has no scaler section")?)?;
        let fuser = take("fuser").map(AttentionFuser::from_text).transpose()?;
        let model = model_from_text(take("model").context("bundle has no model section")?)?;
        Ok(Bundle {
            window: WindowSpec { half_m, half_n },
            scaler,
            fuser,
            model,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gravzone_core::FusionMode;

    #[test]
    fn round_trip() {
        let b = Bundle {
            window: WindowSpec {
                half_m: 3,
                half_n: 2,
            },
            scaler: Scaler {
                mean: vec![0.5, 1.0],
                std: vec![2.0, 0.0],
            },
            fuser: Some(AttentionFuser::identity(2, FusionMode::Reweight).unwrap()),
            model: Model::Baseline {
                label: 0,
                n_features: 2,
            },
        };
        assert_eq!(Bundle::from_text(&b.to_text()).unwrap(), b);
        let no_fuser = Bundle { fuser: None, ..b };
        assert_eq!(Bundle::from_text(&no_fuser.to_text()).unwrap(), no_fuser);
        assert!(Bundle::from_text("nope").is_err());
    }
}
