//! On-disk system specification: a JSON document describing the orders,
//! sector, coefficient terms, and grid of a system. Parsing is lossless
//! (parse -> serialize -> parse is the identity) and semantic validation
//! reports JSON-pointer paths.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::GridSpec;
use crate::symbol::{validate_orders, Bump, CoefficientFn, DNSystem, MultiIndex, Sector, Term};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SystemSpecFile {
    /// Ambient dimension.
    pub n: usize,
    /// System size.
    #[serde(rename = "N")]
    pub size: usize,
    pub s: Vec<i64>,
    pub t: Vec<i64>,
    pub sector: SectorSpec,
    /// `entries[j][k]` lists the terms of operator entry (j, k).
    pub entries: Vec<Vec<Vec<TermSpec>>>,
    pub grid: GridSpecFile,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SectorSpec {
    pub theta_min: f64,
    pub theta_max: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridSpecFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermSpec {
    pub alpha: Vec<u32>,
    pub coeff: CoeffSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoeffSpec {
    pub const_re: f64,
    pub const_im: f64,
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BumpSpec {
    pub amp_re: f64,
    pub amp_im: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

fn invalid(path: String, reason: impl Into<String>) -> Error {
    Error::Validation {
        path,
        reason: reason.into(),
    }
}

impl SystemSpecFile {
    /// Parse from a JSON string.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Full semantic validation; errors carry the JSON-pointer path of the
    /// offending field.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("/n".into(), "dimension must be positive"));
        }
        if self.size == 0 {
            return Err(invalid("/N".into(), "system size must be positive"));
        }
        if self.s.len() != self.size {
            return Err(invalid("/s".into(), format!("expected {} entries", self.size)));
        }
        if self.t.len() != self.size {
            return Err(invalid("/t".into(), format!("expected {} entries", self.size)));
        }
        for (j, &sj) in self.s.iter().enumerate() {
            if sj < 0 {
                return Err(invalid(format!("/s/{j}"), "weights s_j must be >= 0"));
            }
        }
        for (j, &tj) in self.t.iter().enumerate() {
            if tj <= 0 {
                return Err(invalid(format!("/t/{j}"), "weights t_j must be > 0"));
            }
        }
        let orders = validate_orders(&self.s, &self.t).map_err(|e| match e {
            Error::InvalidOrders { index, reason } => invalid(format!("/s/{index}"), reason),
            other => other,
        })?;
        if !(0.0..=2.0 * std::f64::consts::PI).contains(&self.sector.theta_min)
            || self.sector.theta_max < self.sector.theta_min
            || self.sector.theta_max > 2.0 * std::f64::consts::PI
        {
            return Err(invalid(
                "/sector".into(),
                "need 0 <= theta_min <= theta_max <= 2*pi",
            ));
        }
        if self.entries.len() != self.size {
            return Err(invalid("/entries".into(), format!("expected {} rows", self.size)));
        }
        for (j, row) in self.entries.iter().enumerate() {
            if row.len() != self.size {
                return Err(invalid(
                    format!("/entries/{j}"),
                    format!("expected {} columns", self.size),
                ));
            }
            for (k, terms) in row.iter().enumerate() {
                let cap = orders.s()[j] + orders.t()[k];
                for (i, term) in terms.iter().enumerate() {
                    let path = format!("/entries/{j}/{k}/{i}");
                    if term.alpha.len() != self.n {
                        return Err(invalid(
                            format!("{path}/alpha"),
                            format!("expected {} components", self.n),
                        ));
                    }
                    let order: u32 = term.alpha.iter().sum();
                    if i64::from(order) > cap {
                        return Err(invalid(
                            format!("{path}/alpha"),
                            format!("order {order} exceeds cap s_{j} + t_{k} = {cap}"),
                        ));
                    }
                    for (b, bump) in term.coeff.bumps.iter().enumerate() {
                        if bump.center.len() != self.n {
                            return Err(invalid(
                                format!("{path}/coeff/bumps/{b}/center"),
                                format!("expected {} components", self.n),
                            ));
                        }
                        if !(bump.width > 0.0) {
                            return Err(invalid(
                                format!("{path}/coeff/bumps/{b}/width"),
                                "width must be positive",
                            ));
                        }
                    }
                }
            }
        }
        if self.grid.m < 4 || self.grid.m % 2 != 0 {
            return Err(invalid("/grid/M".into(), "grid size must be even and >= 4"));
        }
        if !(self.grid.l > 0.0) {
            return Err(invalid("/grid/L".into(), "period must be positive"));
        }
        Ok(())
    }

    pub fn to_system(&self) -> Result<DNSystem> {
        self.validate()?;
        let orders = validate_orders(&self.s, &self.t)?;
        let entries = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|terms| {
                        terms
                            .iter()
                            .map(|term| Term {
                                alpha: MultiIndex(term.alpha.clone()),
                                coeff: CoefficientFn {
                                    constant: Complex64::new(
                                        term.coeff.const_re,
                                        term.coeff.const_im,
                                    ),
                                    bumps: term
                                        .coeff
                                        .bumps
                                        .iter()
                                        .map(|b| {
                                            Bump::new(
                                                Complex64::new(b.amp_re, b.amp_im),
                                                b.center.clone(),
                                                b.width,
                                            )
                                        })
                                        .collect(),
                                },
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        DNSystem::new(self.n, orders, entries)
    }

    pub fn sector(&self) -> Result<Sector> {
        Sector::new(self.sector.theta_min, self.sector.theta_max)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.grid.m, self.grid.l)
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}

/// Render a `DNSystem`-shaped description back into the file format.
pub fn from_system(
    sys: &DNSystem,
    sector: SectorSpec,
    grid: GridSpecFile,
    tolerances: BTreeMap<String, f64>,
) -> SystemSpecFile {
    let orders = sys.orders();
    SystemSpecFile {
        n: sys.dim(),
        size: sys.size(),
        s: orders.s().to_vec(),
        t: orders.t().to_vec(),
        sector,
        entries: sys
            .entries()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|terms| {
                        terms
                            .iter()
                            .map(|term| TermSpec {
                                alpha: term.alpha.0.clone(),
                                coeff: CoeffSpec {
                                    const_re: term.coeff.constant.re,
                                    const_im: term.coeff.constant.im,
                                    bumps: term
                                        .coeff
                                        .bumps
                                        .iter()
                                        .map(|b| BumpSpec {
                                            amp_re: b.amplitude.re,
                                            amp_im: b.amplitude.im,
                                            center: b.center.clone(),
                                            width: b.width,
                                        })
                                        .collect(),
                                },
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        grid,
        tolerances,
    }
}
