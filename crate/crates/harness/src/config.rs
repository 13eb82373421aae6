//! Run configuration: experiment kind, scenario grids, schemes and receivers.
//!
//! Configs are plain `key = value` files with `#` comments. List values are
//! comma separated; integer lists also accept `a..b` ranges (inclusive).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use oia_core::channel::Scenario;
use oia_core::codebook::{Kind, MAX_FEEDBACK_BITS};

use crate::error::{HarnessError, Result};

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Config(msg.into()))
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = HarnessError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => bad(format!(concat!("unknown ", stringify!($name), " `{}`"), other)),
                }
            }
        }
    };
}

string_enum!(Scheme {
    SvdOia => "svd_oia",
    GcOia => "gc_oia",
    RcOia => "rc_oia",
    MaxSnr => "max_snr",
});

string_enum!(Receiver {
    Zf => "zf",
    MedGmi => "med_gmi",
    Capacity => "capacity",
});

string_enum!(Experiment {
    SumlifVsN => "sumlif-vs-n",
    SumlifVsNf => "sumlif-vs-nf",
    RateVsSnr => "rate-vs-snr",
    RateVsN => "rate-vs-n",
});

impl Scheme {
    /// Codebook used by the scheme, if any.
    pub fn codebook_kind(self) -> Option<Kind> {
        match self {
            Scheme::GcOia => Some(Kind::Grassmannian),
            Scheme::RcOia => Some(Kind::Random),
            Scheme::SvdOia | Scheme::MaxSnr => None,
        }
    }
}

/// The grid an experiment sweeps over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Users,
    FeedbackBits,
    Snr,
}

impl Experiment {
    pub fn sweep_axis(self) -> SweepAxis {
        match self {
            Experiment::SumlifVsN | Experiment::RateVsN => SweepAxis::Users,
            Experiment::SumlifVsNf => SweepAxis::FeedbackBits,
            Experiment::RateVsSnr => SweepAxis::Snr,
        }
    }

    pub fn measures_rate(self) -> bool {
        matches!(self, Experiment::RateVsSnr | Experiment::RateVsN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub s: usize,
    /// Users per cell; the sweep grid for the N experiments.
    pub n: Vec<usize>,
    /// Feedforward bits for codebook schemes; the sweep grid for `sumlif-vs-nf`.
    pub n_f: Vec<u32>,
    /// SNR points in dB; the sweep grid for `rate-vs-snr`.
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub receivers: Vec<Receiver>,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub summary: bool,
    /// Directory for cached codebook files.
    pub codebook_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults matching the published figure settings for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = RunConfig {
            experiment,
            k: 2,
            m: 3,
            l: 2,
            s: 2,
            n: vec![100],
            n_f: vec![6],
            snr_db: vec![20.0],
            schemes: vec![Scheme::SvdOia, Scheme::GcOia, Scheme::RcOia],
            receivers: Receiver::ALL.to_vec(),
            trials: 1000,
            seed: 42,
            workers: 1,
            out: None,
            summary: false,
            codebook_dir: None,
        };
        match experiment {
            Experiment::SumlifVsN => RunConfig { n: vec![25, 50, 100, 200, 400], n_f: vec![4, 8], ..base },
            Experiment::SumlifVsNf => RunConfig { n_f: (1..=10).collect(), trials: 500, ..base },
            Experiment::RateVsSnr => RunConfig {
                n: vec![20, 100],
                snr_db: (0..=8).map(|k| 5.0 * k as f64).collect(),
                schemes: vec![Scheme::SvdOia, Scheme::GcOia, Scheme::RcOia, Scheme::MaxSnr],
                ..base
            },
            Experiment::RateVsN => RunConfig {
                n: vec![20, 35, 61, 107, 188, 329, 576, 1000],
                schemes: vec![Scheme::RcOia],
                trials: 500,
                ..base
            },
        }
    }

    /// Loads a config file on top of the experiment defaults.
    pub fn from_file(experiment: Experiment, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = RunConfig::defaults(experiment);
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; later lines override earlier ones.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected `key = value`", idx + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {}", idx + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.to_ascii_lowercase().as_str() {
            "k" => self.k = parse_one(key, value)?,
            "m" => self.m = parse_one(key, value)?,
            "l" => self.l = parse_one(key, value)?,
            "s" => self.s = parse_one(key, value)?,
            "n" => self.n = parse_int_list(key, value)?,
            "n_f" => self.n_f = parse_int_list(key, value)?,
            "snr_db" => self.snr_db = parse_list(key, value)?,
            "schemes" => self.schemes = parse_list(key, value)?,
            "receivers" => self.receivers = parse_list(key, value)?,
            "trials" => self.trials = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "workers" => self.workers = parse_one(key, value)?,
            "summary" => self.summary = parse_one(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "codebook_dir" => self.codebook_dir = Some(PathBuf::from(value)),
            other => return bad(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        if self.k < 2 {
            return bad("the experiments need K >= 2 cells");
        }
        if self.n.is_empty() || self.n_f.is_empty() || self.snr_db.is_empty() {
            return bad("N, n_f and snr_db need at least one value");
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected");
        }
        if self.experiment.measures_rate() && self.receivers.is_empty() {
            return bad("no receivers selected");
        }
        strictly_increasing("N", &self.n)?;
        strictly_increasing("n_f", &self.n_f)?;
        strictly_increasing("snr_db", &self.snr_db)?;
        distinct("schemes", &self.schemes)?;
        distinct("receivers", &self.receivers)?;
        if self.n_f.iter().any(|&b| b > MAX_FEEDBACK_BITS) {
            return bad(format!("n_f above {MAX_FEEDBACK_BITS} bits"));
        }
        let sweeps_single = |len: usize, axis: SweepAxis| axis == self.experiment.sweep_axis() || len == 1;
        if !sweeps_single(self.snr_db.len(), SweepAxis::Snr) && !self.experiment.measures_rate() {
            return bad("snr_db is not used by sum-LIF experiments; give a single value");
        }
        if self.experiment.sweep_axis() == SweepAxis::FeedbackBits && self.n.len() != 1 {
            return bad("sumlif-vs-nf runs at a single N");
        }
        if self.experiment == Experiment::RateVsN && self.snr_db.len() != 1 {
            return bad("rate-vs-n runs at a single SNR");
        }
        for &n in &self.n {
            self.scenario(n).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Core scenario for one user count.
    pub fn scenario(&self, n: usize) -> oia_core::error::Result<Scenario> {
        let mut sc = Scenario::new(self.k, self.m, n, self.l, self.s)?;
        sc.snr_db = self.snr_db.clone();
        sc.trials = self.trials;
        sc.seed = self.seed;
        Ok(sc)
    }
}

fn strip_prefix(e: HarnessError) -> String {
    match e {
        HarnessError::Config(msg) => msg,
        other => other.to_string(),
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().or_else(|_| bad(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|v| parse_one(key, v)).collect()
}

fn parse_int_list<T>(key: &str, value: &str) -> Result<Vec<T>>
where
    T: FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (parse_one(key, a.trim())?, parse_one(key, b.trim())?);
            for x in a..=b {
                out.push(T::try_from(x).or_else(|_| bad(format!("`{x}` out of range for `{key}`")))?);
            }
        } else {
            out.push(parse_one(key, part)?);
        }
    }
    Ok(out)
}

fn strictly_increasing<T: PartialOrd>(name: &str, xs: &[T]) -> Result<()> {
    if xs.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        bad(format!("{name} grid must be strictly increasing"))
    }
}

fn distinct<T: PartialEq + fmt::Display>(name: &str, xs: &[T]) -> Result<()> {
    for (i, x) in xs.iter().enumerate() {
        if xs[..i].contains(x) {
            return bad(format!("{name} lists `{x}` twice"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for &e in Experiment::ALL {
            RunConfig::defaults(e).validate().unwrap();
        }
    }

    #[test]
    fn text_overrides_defaults() {
        let mut cfg = RunConfig::defaults(Experiment::SumlifVsNf);
        cfg.apply_text("# comment\nN = 40\nn_f = 1..3, 5  # tail\nschemes = svd_oia,rc_oia\n\nseed=7\n").unwrap();
        assert_eq!(cfg.n, vec![40]);
        assert_eq!(cfg.n_f, vec![1, 2, 3, 5]);
        assert_eq!(cfg.schemes, vec![Scheme::SvdOia, Scheme::RcOia]);
        assert_eq!(cfg.seed, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_lines_report_their_number() {
        let mut cfg = RunConfig::defaults(Experiment::SumlifVsN);
        let err = cfg.apply_text("K = 2\nwhat\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = cfg.apply_text("colour = blue").unwrap_err().to_string();
        assert!(err.contains("unknown key"), "{err}");
        assert!(cfg.apply_text("schemes = svd_oia, nope").is_err());
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut cfg = RunConfig::defaults(Experiment::SumlifVsN);
        cfg.n = vec![50, 25];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::defaults(Experiment::SumlifVsN);
        cfg.n = vec![1];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::defaults(Experiment::RateVsN);
        cfg.snr_db = vec![0.0, 10.0];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::defaults(Experiment::SumlifVsNf);
        cfg.n = vec![20, 40];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn enum_names_round_trip() {
        for &s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        for &r in Receiver::ALL {
            assert_eq!(r.as_str().parse::<Receiver>().unwrap(), r);
        }
    }
}
