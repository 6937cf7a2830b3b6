use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf};
use crate::types::{Dataset, LossConfig, RegConstraint, RegKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNegative,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// `Σ linear + Σ quadratic·v² (sense) rhs`, terms indexing [`MilpModel::variables`].
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `Σ linear + Σ quadratic·v²`, minimized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Objective {
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<(usize, f64)>,
}

/// The big-M mixture model as explicit rows:
///
/// ```text
/// minimize   (1/n) Σ_i t_i^p
/// res_pos:   t_i - x_i'β_k - M c_ki >= -y_i - M
/// res_neg:   t_i + x_i'β_k - M c_ki >=  y_i - M
/// assign:    Σ_k c_ki = 1
/// reg:       ‖β_k‖_q <= d_k
/// ```
///
/// Continuous variables come first, binaries last, each in export order.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub loss: LossConfig,
    pub reg: RegConstraint,
    pub big_m: f64,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

impl MilpModel {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn count_rows(&self, prefix: &str) -> usize {
        self.constraints.iter().filter(|c| c.name.starts_with(prefix)).count()
    }
}

/// Smallest M for which `c_ki = 0` never binds `t_i`: by Hölder,
/// `|y_i - x_i'β| <= |y_i| + ‖x_i‖_* ‖β‖_q`, with `‖·‖_*` the dual norm.
///
/// No finite bound exists without a norm constraint, nor under ℓ0 (support
/// size does not bound magnitude); both report [`Error::BigMUnbounded`].
pub fn holder_big_m(ds: &Dataset, reg: &RegConstraint) -> Result<f64> {
    let dual: fn(&[f64]) -> f64 = match reg.kind() {
        RegKind::L2 => norm2,
        RegKind::L1 => norm_inf,
        RegKind::None | RegKind::L0 => return Err(Error::BigMUnbounded),
    };
    let ymax = ds.y().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let xmax = ds.x().iter_rows().map(dual).fold(0.0_f64, f64::max);
    Ok(reg.bounds().iter().map(|b| ymax + xmax * b).fold(0.0_f64, f64::max))
}

struct Builder {
    variables: Vec<Variable>,
}

impl Builder {
    fn add(&mut self, name: String, kind: VarKind) -> usize {
        self.variables.push(Variable { name, kind });
        self.variables.len() - 1
    }
}

pub fn build_model(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    m_override: Option<f64>,
) -> Result<MilpModel> {
    if k == 0 {
        return Err(Error::Invalid("K must be at least 1".into()));
    }
    reg.validate(k, ds.d())?;
    let big_m = match m_override {
        Some(m) if m.is_finite() && m > 0.0 => m,
        Some(m) => return Err(Error::Invalid(format!("big-M override {m} must be > 0"))),
        None => holder_big_m(ds, reg)?,
    };
    let (n, d) = (ds.n(), ds.d());
    let split = reg.kind() == RegKind::L1;

    let mut b = Builder { variables: Vec::new() };
    // coefficient of β_kj in x'β is +1 on `pos` and -1 on `neg` (if split)
    let mut beta: Vec<Vec<(usize, Option<usize>)>> = Vec::with_capacity(k);
    for kk in 0..k {
        beta.push(
            (0..d)
                .map(|j| {
                    if split {
                        let p = b.add(format!("beta_{kk}_{j}_pos"), VarKind::NonNegative);
                        let q = b.add(format!("beta_{kk}_{j}_neg"), VarKind::NonNegative);
                        (p, Some(q))
                    } else {
                        (b.add(format!("beta_{kk}_{j}"), VarKind::Free), None)
                    }
                })
                .collect(),
        );
    }
    let t: Vec<usize> = (0..n).map(|i| b.add(format!("t_{i}"), VarKind::NonNegative)).collect();
    let c: Vec<Vec<usize>> = (0..k)
        .map(|kk| (0..n).map(|i| b.add(format!("c_{kk}_{i}"), VarKind::Binary)).collect())
        .collect();
    let z: Vec<Vec<usize>> = if reg.kind() == RegKind::L0 {
        (0..k)
            .map(|kk| (0..d).map(|j| b.add(format!("z_{kk}_{j}"), VarKind::Binary)).collect())
            .collect()
    } else {
        Vec::new()
    };

    let xb_terms = |kk: usize, row: &[f64], sign: f64| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (j, &xv) in row.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let (p, q) = beta[kk][j];
            out.push((p, sign * xv));
            if let Some(q) = q {
                out.push((q, -sign * xv));
            }
        }
        out
    };

    let mut constraints = Vec::new();
    for i in 0..n {
        let row = ds.x().row(i);
        let y = ds.y()[i];
        for kk in 0..k {
            for (name, sign, rhs) in [("res_pos", -1.0, -y - big_m), ("res_neg", 1.0, y - big_m)] {
                let mut linear = vec![(t[i], 1.0)];
                linear.extend(xb_terms(kk, row, sign));
                linear.push((c[kk][i], -big_m));
                constraints.push(Constraint {
                    name: format!("{name}_{i}_{kk}"),
                    linear,
                    quadratic: Vec::new(),
                    sense: Sense::Ge,
                    rhs,
                });
            }
        }
    }
    for i in 0..n {
        constraints.push(Constraint {
            name: format!("assign_{i}"),
            linear: (0..k).map(|kk| (c[kk][i], 1.0)).collect(),
            quadratic: Vec::new(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    for kk in 0..k {
        let bound = reg.bounds().get(kk).copied().unwrap_or(0.0);
        match reg.kind() {
            RegKind::None => {}
            RegKind::L2 => constraints.push(Constraint {
                name: format!("reg_{kk}"),
                linear: Vec::new(),
                quadratic: beta[kk].iter().map(|&(p, _)| (p, 1.0)).collect(),
                sense: Sense::Le,
                rhs: bound * bound,
            }),
            RegKind::L1 => constraints.push(Constraint {
                name: format!("reg_{kk}"),
                linear: beta[kk]
                    .iter()
                    .flat_map(|&(p, q)| [(p, 1.0), (q.expect("split"), 1.0)])
                    .collect(),
                quadratic: Vec::new(),
                sense: Sense::Le,
                rhs: bound,
            }),
            RegKind::L0 => {
                for j in 0..d {
                    let (p, _) = beta[kk][j];
                    for (name, sign, sense) in [("supp_up", -1.0, Sense::Le), ("supp_lo", 1.0, Sense::Ge)] {
                        constraints.push(Constraint {
                            name: format!("{name}_{kk}_{j}"),
                            linear: vec![(p, 1.0), (z[kk][j], sign * big_m)],
                            quadratic: Vec::new(),
                            sense,
                            rhs: 0.0,
                        });
                    }
                }
                constraints.push(Constraint {
                    name: format!("reg_{kk}"),
                    linear: z[kk].iter().map(|&v| (v, 1.0)).collect(),
                    quadratic: Vec::new(),
                    sense: Sense::Le,
                    rhs: bound,
                });
            }
        }
    }

    let w = 1.0 / n as f64;
    let objective = match loss {
        LossConfig::Abs => Objective {
            linear: t.iter().map(|&v| (v, w)).collect(),
            quadratic: Vec::new(),
        },
        LossConfig::Squared => Objective {
            linear: Vec::new(),
            quadratic: t.iter().map(|&v| (v, w)).collect(),
        },
    };

    Ok(MilpModel {
        n,
        d,
        k,
        loss,
        reg: reg.clone(),
        big_m,
        variables: b.variables,
        constraints,
        objective,
    })
}
