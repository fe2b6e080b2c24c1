//! Experiment configuration: `key = value` lines grouped under `[section]`
//! headers. Paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ini::{Ini, Properties};
use stflow_core::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Disk { radius: f64 },
    GrowingDisk { radius: f64, growth: f64 },
    PuncturedDisk { radius: f64, puncture: Point, fill_time: f64 },
    Annulus { inner: f64, outer: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// Uniform measure of total `mass` on the closed disk.
    Disk { center: Point, radius: f64, mass: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundSpec {
    Floor(f64),
    Complete,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowSpec {
    BigBang,
    Flat { value: f64 },
    Measure { measure: MeasureSpec, sigma: Option<f64>, background: BackgroundSpec },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeLadder {
    pub t_init: f64,
    pub tau: f64,
    pub t_final: f64,
    pub stride: f64,
}

impl TimeLadder {
    /// `t_init`, then every `stride` up to and including `t_final`.
    pub fn snapshots(&self) -> Vec<f64> {
        let mut out = vec![self.t_init];
        let mut k = 1;
        loop {
            let t = self.t_init + k as f64 * self.stride;
            if t >= self.t_final - 1e-12 * self.t_final {
                break;
            }
            out.push(t);
            k += 1;
        }
        if self.t_final > self.t_init {
            out.push(self.t_final);
        }
        out
    }
}

/// One `[check.NAME]` section: its name and raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl CheckSpec {
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.params
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| anyhow!("check `{}`: bad value `{v}` for `{key}`", self.name)))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn point_or(&self, key: &str, default: Point) -> Result<Point> {
        match self.params.get(key) {
            Some(v) => parse_point(v).with_context(|| format!("check `{}`: `{key}`", self.name)),
            None => Ok(default),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            Some(v) => parse_list(v).with_context(|| format!("check `{}`: `{key}`", self.name)),
            None => Ok(default.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub expect_fail: bool,
    pub seed: Option<u64>,
    pub grid: GridSpec,
    pub domain: DomainSpec,
    /// Boundary value used wherever a hyperbolic factor has to be solved.
    pub phi_b: f64,
    pub flow: FlowSpec,
    pub time: TimeLadder,
    pub checks: Vec<CheckSpec>,
    /// Directory of the config file.
    pub base: PathBuf,
}

pub fn parse_point(s: &str) -> Result<Point> {
    let v = parse_list(s)?;
    match v.as_slice() {
        [x, y] => Ok(Point::new(*x, *y)),
        _ => bail!("expected `x, y`, got `{s}`"),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("bad number `{}`", p.trim()))).collect()
}

struct Section<'a> {
    name: &'a str,
    props: Option<&'a Properties>,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.props.and_then(|p| p.get(key))
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key).ok_or_else(|| anyhow!("[{}] is missing `{key}`", self.name))?;
        v.parse().map_err(|_| anyhow!("[{}] bad value `{v}` for `{key}`", self.name))
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| v.parse().map_err(|_| anyhow!("[{}] bad value `{v}` for `{key}`", self.name))).transpose()
    }

    fn point(&self, key: &str, default: Point) -> Result<Point> {
        match self.raw(key) {
            Some(v) => parse_point(v).with_context(|| format!("[{}] `{key}`", self.name)),
            None => Ok(default),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| anyhow!("{e}"))?;
        let section = |name: &'static str| Section { name, props: ini.section(Some(name)) };
        let general = Section { name: "general", props: Some(ini.general_section()) };
        let resolve = |p: &str| -> Result<PathBuf> {
            let full = base.join(p);
            if !full.exists() {
                bail!("referenced file {} does not exist", full.display());
            }
            Ok(full)
        };

        let scenario: String = general.req("scenario")?;
        let expect_fail = general.opt::<bool>("expect_fail")?.unwrap_or(false);
        let seed = general.opt::<u64>("seed")?;

        let g = section("grid");
        let grid = GridSpec { half_width: g.req("half_width")?, spacing: g.req("spacing")? };
        if !(grid.half_width > 0.0 && grid.spacing > 0.0 && grid.spacing < grid.half_width) {
            bail!("[grid] needs 0 < spacing < half_width");
        }

        let d = section("domain");
        let kind: String = d.req("kind")?;
        let domain = match kind.as_str() {
            "disk" => DomainSpec::Disk { radius: d.req("radius")? },
            "growing-disk" => DomainSpec::GrowingDisk { radius: d.req("radius")?, growth: d.opt("growth")?.unwrap_or(1.0) },
            "punctured-disk" => DomainSpec::PuncturedDisk {
                radius: d.req("radius")?,
                puncture: d.point("puncture", Point::default())?,
                fill_time: d.req("fill_time")?,
            },
            "annulus" => DomainSpec::Annulus { inner: d.req("inner_radius")?, outer: d.req("radius")? },
            "file" => DomainSpec::File(resolve(&d.req::<String>("file")?)?),
            other => bail!("[domain] unknown kind `{other}`"),
        };
        let phi_b = d.opt("phi_b")?.unwrap_or(7.0);

        let f = section("flow");
        let kind: String = f.req("kind")?;
        let flow = match kind.as_str() {
            "big-bang" => FlowSpec::BigBang,
            "flat" => FlowSpec::Flat { value: f.req("value")? },
            "mollified-measure" => {
                let measure = match f.raw("measure") {
                    Some(p) => MeasureSpec::File(resolve(p)?),
                    None => MeasureSpec::Disk {
                        center: f.point("support_center", Point::default())?,
                        radius: f.req("support_radius")?,
                        mass: f.req("mass")?,
                    },
                };
                let background = match f.raw("background").unwrap_or("floor") {
                    "floor" => BackgroundSpec::Floor(f.opt("floor")?.unwrap_or(1e-6)),
                    "complete" => BackgroundSpec::Complete,
                    other => bail!("[flow] unknown background `{other}`"),
                };
                FlowSpec::Measure { measure, sigma: f.opt("sigma")?, background }
            }
            "file" => FlowSpec::File(resolve(&f.req::<String>("file")?)?),
            other => bail!("[flow] unknown kind `{other}`"),
        };

        let t = section("time");
        let time = TimeLadder { t_init: t.req("t_init")?, tau: t.req("tau")?, t_final: t.req("t_final")?, stride: t.req("stride")? };
        if !(time.t_init > 0.0 && time.t_init < time.t_final) {
            bail!("[time] needs 0 < t_init < t_final");
        }
        if !(time.tau > 0.0 && time.stride > 0.0) {
            bail!("[time] tau and stride must be positive");
        }

        let mut checks = Vec::new();
        for (name, props) in ini.iter() {
            let Some(name) = name.and_then(|n| n.strip_prefix("check.")) else {
                continue;
            };
            let params: BTreeMap<String, String> = props.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            let spec = CheckSpec { name: name.to_string(), params };
            if let Some(tol) = spec.get::<f64>("tol")? {
                if !(tol > 0.0) {
                    bail!("check `{name}`: tolerance must be positive");
                }
            }
            checks.push(spec);
        }
        for (name, _) in ini.iter() {
            if let Some(n) = name {
                if !matches!(n, "grid" | "domain" | "flow" | "time") && !n.starts_with("check.") {
                    bail!("unknown section [{n}]");
                }
            }
        }

        Ok(Self { scenario, expect_fail, seed, grid, domain, phi_b, flow, time, checks, base: base.to_path_buf() })
    }
}
