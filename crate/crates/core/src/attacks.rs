//! Cloning attacks: phase-covariant and imbalanced cloner fragments, their
//! closed forms, and a derivative-free attack-angle optimizer.
//!
//! Both cloners share one two-qubit core on (data d, blank e):
//! `CNOT(d→e) · Ry_d(2μ) · CNOT(e→d) · Ry_d(ν+μ) · CNOT(e→d) · Ry_d(−ν−μ) · CNOT(d→e)`
//! which sends |00⟩ → cos μ|00⟩ + sin μ|11⟩ and |10⟩ → cos ν|10⟩ + sin ν|01⟩.
//! The core is conjugated by R = H·S·H, which rotates the x–y equator onto
//! the x–z great circle holding the four BB84 states.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use crate::circuit::{Circuit, Instruction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttackError {
    #[error("attack angle theta = {0} outside [0, π]")]
    ThetaOutOfRange(f64),
    #[error("attack angle psi = {0} outside [0, π/2]")]
    PsiOutOfRange(f64),
    #[error("noise parameter p = {0} outside [0, 0.5]")]
    NoiseOutOfRange(f64),
    #[error("invalid optimizer setting: {0}")]
    BadConfig(String),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
}

const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClonerSpec {
    Pccm { theta: f64 },
    Imbalanced { psi: f64, phi: f64 },
}

impl ClonerSpec {
    pub fn validate(&self) -> Result<(), AttackError> {
        match *self {
            ClonerSpec::Pccm { theta } => check_theta(theta),
            ClonerSpec::Imbalanced { psi, phi } => {
                check_psi(psi)?;
                if phi.is_finite() {
                    Ok(())
                } else {
                    Err(AttackError::BadConfig(format!("phi = {phi}")))
                }
            }
        }
    }

    pub fn fragment(&self) -> Result<Circuit, AttackError> {
        match *self {
            ClonerSpec::Pccm { theta } => pccm_fragment(theta),
            ClonerSpec::Imbalanced { psi, phi } => imbalanced_fragment(psi, phi),
        }
    }
}

fn check_theta(theta: f64) -> Result<(), AttackError> {
    if (-ANGLE_SLACK..=PI + ANGLE_SLACK).contains(&theta) {
        Ok(())
    } else {
        Err(AttackError::ThetaOutOfRange(theta))
    }
}

fn check_psi(psi: f64) -> Result<(), AttackError> {
    if (-ANGLE_SLACK..=FRAC_PI_2 + ANGLE_SLACK).contains(&psi) {
        Ok(())
    } else {
        Err(AttackError::PsiOutOfRange(psi))
    }
}

/// Two-qubit fragment on qubits (0 = data, 1 = blank in |0⟩).
fn cloner_core(mu: f64, nu: f64) -> Circuit {
    let (d, e) = (0, 1);
    let mut c = Circuit::new(2, 0);
    let gates = [
        Instruction::h(d),
        Instruction::s(d),
        Instruction::h(d),
        Instruction::cnot(d, e),
        Instruction::ry(d, 2.0 * mu),
        Instruction::cnot(e, d),
        Instruction::ry(d, nu + mu),
        Instruction::cnot(e, d),
        Instruction::ry(d, -(nu + mu)),
        Instruction::cnot(d, e),
        Instruction::h(d),
        Instruction::sdg(d),
        Instruction::h(d),
        Instruction::h(e),
        Instruction::sdg(e),
        Instruction::h(e),
    ];
    for g in gates {
        c.append(g).expect("fragment gates are in range");
    }
    c
}

/// Phase-covariant cloner: C_AB = cos(θ/2), C_AE = sin(θ/2) in both bases.
pub fn pccm_fragment(theta: f64) -> Result<Circuit, AttackError> {
    check_theta(theta)?;
    Ok(cloner_core(0.0, theta / 2.0))
}

/// Imbalanced cloner. With A = ψ and S = π/2 + φ the sifted correlations are
/// C_AB,X = cos A, C_AE,Z = sin A, C_AB,Z = cos S, C_AE,X = sin S.
pub fn imbalanced_fragment(psi: f64, phi: f64) -> Result<Circuit, AttackError> {
    check_psi(psi)?;
    let (a, s) = (psi, FRAC_PI_2 + phi);
    Ok(cloner_core((s - a) / 2.0, (a + s) / 2.0))
}

/// Tuning angle φ = −arctan((1−2p)² cot ψ); the ψ → 0 limit is −π/2.
pub fn optimal_phi(psi: f64, p: f64) -> Result<f64, AttackError> {
    check_psi(psi)?;
    if !(0.0..=0.5).contains(&p) {
        return Err(AttackError::NoiseOutOfRange(p));
    }
    if psi <= 0.0 {
        return Ok(if p == 0.5 { 0.0 } else { -FRAC_PI_2 });
    }
    if psi >= FRAC_PI_2 {
        return Ok(0.0);
    }
    let w = (1.0 - 2.0 * p).powi(2);
    Ok(-(w * psi.cos()).atan2(psi.sin()))
}

/// Ideal (C_AB, C_AE) of the phase-covariant cloner.
pub fn expected_pccm_correlations(theta: f64) -> (f64, f64) {
    ((theta / 2.0).cos(), (theta / 2.0).sin())
}

/// Ideal (F_AB, F_AE) of the phase-covariant cloner.
pub fn pccm_fidelities(theta: f64) -> (f64, f64) {
    let (ab, ae) = expected_pccm_correlations(theta);
    ((1.0 + ab) / 2.0, (1.0 + ae) / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QclConfig {
    pub alpha: f64,
    pub f: f64,
    pub shots_per_eval: u64,
    pub max_iterations: usize,
    pub initial_theta: f64,
    pub seed: u64,
}

impl Default for QclConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            f: 0.85,
            shots_per_eval: 500,
            max_iterations: 30,
            initial_theta: FRAC_PI_2,
            seed: 0,
        }
    }
}

impl QclConfig {
    pub fn validate(&self) -> Result<(), AttackError> {
        if !(0.5..=1.0).contains(&self.f) {
            return Err(AttackError::BadConfig(format!("f = {} outside [0.5, 1]", self.f)));
        }
        if !(self.alpha > 0.0) {
            return Err(AttackError::BadConfig(format!("alpha = {} must be positive", self.alpha)));
        }
        if self.max_iterations < 3 {
            return Err(AttackError::BadConfig("max_iterations must be at least 3".into()));
        }
        if self.shots_per_eval == 0 {
            return Err(AttackError::BadConfig("shots_per_eval must be positive".into()));
        }
        check_theta(self.initial_theta)
    }
}

/// L(θ) = α(F_AB − f)² − F_AE.
pub fn qcl_loss(alpha: f64, f: f64, f_ab: f64, f_ae: f64) -> f64 {
    alpha * (f_ab - f).powi(2) - f_ae
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QclStep {
    pub iteration: usize,
    pub theta: f64,
    pub loss: f64,
    pub f_ab: f64,
    pub f_ae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QclResult {
    pub theta_star: f64,
    pub trace: Vec<QclStep>,
}

/// Golden-section search for the loss minimum over θ ∈ [0, π].
///
/// The evaluator receives (θ, evaluation index) and returns shot-based
/// (F_AB, F_AE). Evaluation 0 is the configured initial angle; the
/// remaining budget shrinks the bracket. The returned angle is the centre
/// of the final bracket.
pub fn qcl_optimize<E>(config: &QclConfig, mut evaluator: E) -> Result<QclResult, AttackError>
where
    E: FnMut(f64, usize) -> Result<(f64, f64), String>,
{
    config.validate()?;
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut eval = |theta: f64, trace: &mut Vec<QclStep>| -> Result<f64, AttackError> {
        let iteration = trace.len();
        let (f_ab, f_ae) = evaluator(theta, iteration).map_err(AttackError::Evaluator)?;
        let loss = qcl_loss(config.alpha, config.f, f_ab, f_ae);
        trace.push(QclStep {
            iteration,
            theta,
            loss,
            f_ab,
            f_ae,
        });
        Ok(loss)
    };
    eval(config.initial_theta, &mut trace)?;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, PI);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut trace)?;
    let mut fd = eval(d, &mut trace)?;
    while trace.len() < config.max_iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut trace)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut trace)?;
        }
    }
    Ok(QclResult {
        theta_star: 0.5 * (a + b),
        trace,
    })
}

pub const QCL_CSV_HEADER: &str = "iteration,theta,loss,F_AB,F_AE";

pub fn write_qcl_trace_csv<W: Write>(mut w: W, trace: &[QclStep]) -> io::Result<()> {
    writeln!(w, "{QCL_CSV_HEADER}")?;
    for s in trace {
        writeln!(w, "{},{},{},{},{}", s.iteration, s.theta, s.loss, s.f_ab, s.f_ae)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::is_clifford;

    #[test]
    fn closed_forms() {
        assert_eq!(expected_pccm_correlations(0.0), (1.0, 0.0));
        let (ab, ae) = expected_pccm_correlations(FRAC_PI_2);
        assert!((ab - 0.5f64.sqrt()).abs() < 1e-15 && (ae - 0.5f64.sqrt()).abs() < 1e-15);
        let (fab, fae) = pccm_fidelities(PI);
        assert!((fab - 0.5).abs() < 1e-15 && (fae - 1.0).abs() < 1e-15);
        let (fab, _) = pccm_fidelities(FRAC_PI_2);
        assert!((fab - 0.853_553_390_6).abs() < 1e-9);
    }

    #[test]
    fn optimal_phi_values() {
        assert!((optimal_phi(PI / 4.0, 0.0).unwrap() + PI / 4.0).abs() < 1e-15);
        assert_eq!(optimal_phi(FRAC_PI_2, 0.3).unwrap(), 0.0);
        // −arctan(0.25) evaluated independently: 0.2449786631...
        assert!((optimal_phi(PI / 4.0, 0.25).unwrap() + 0.244_978_663_1).abs() < 1e-9);
        assert_eq!(optimal_phi(0.0, 0.1).unwrap(), -FRAC_PI_2);
        for i in 0..=20 {
            assert_eq!(optimal_phi(i as f64 * FRAC_PI_2 / 20.0, 0.5).unwrap(), 0.0);
        }
        assert!(optimal_phi(2.0, 0.1).is_err());
        assert!(optimal_phi(1.0, 0.6).is_err());
    }

    #[test]
    fn optimal_phi_is_monotone_in_psi() {
        for &p in &[0.0, 0.1, 0.25, 0.4] {
            let mut last = f64::NEG_INFINITY;
            for i in 0..=200 {
                let v = optimal_phi(i as f64 * FRAC_PI_2 / 200.0, p).unwrap();
                assert!(v >= last - 1e-15);
                last = v;
            }
        }
    }

    #[test]
    fn range_checks() {
        assert!(pccm_fragment(-0.1).is_err());
        assert!(pccm_fragment(PI + 0.1).is_err());
        assert!(imbalanced_fragment(1.7, 0.0).is_err());
    }

    #[test]
    fn clifford_only_at_boundary_angles() {
        assert!(!is_clifford(&pccm_fragment(0.3).unwrap()));
        assert!(is_clifford(&pccm_fragment(PI).unwrap()));
        assert!(is_clifford(&pccm_fragment(0.0).unwrap()));
    }

    fn exact_evaluator(theta: f64, _: usize) -> Result<(f64, f64), String> {
        Ok(pccm_fidelities(theta))
    }

    #[test]
    fn golden_section_finds_loss_minimum() {
        let cfg = QclConfig::default();
        let r = qcl_optimize(&cfg, exact_evaluator).unwrap();
        assert_eq!(r.trace.len(), 30);
        // Minimize the closed-form loss on a fine grid for reference.
        let grid_min = (0..=100_000)
            .map(|i| i as f64 * PI / 100_000.0)
            .map(|t| {
                let (a, e) = pccm_fidelities(t);
                (qcl_loss(10.0, 0.85, a, e), t)
            })
            .fold((f64::INFINITY, 0.0), |m, x| if x.0 < m.0 { x } else { m });
        assert!((r.theta_star - grid_min.1).abs() < 1e-3);
    }

    #[test]
    fn perfect_target_drives_theta_to_zero() {
        let cfg = QclConfig {
            alpha: 1e9,
            f: 1.0,
            ..QclConfig::default()
        };
        let r = qcl_optimize(&cfg, exact_evaluator).unwrap();
        assert!(r.theta_star < 0.01);
    }

    #[test]
    fn evaluator_errors_propagate() {
        let cfg = QclConfig::default();
        let err = qcl_optimize(&cfg, |_, _| Err("boom".to_string())).unwrap_err();
        assert_eq!(err, AttackError::Evaluator("boom".into()));
        let bad = QclConfig {
            f: 0.2,
            ..QclConfig::default()
        };
        assert!(qcl_optimize(&bad, exact_evaluator).is_err());
    }

    #[test]
    fn qcl_trace_csv_has_one_row_per_evaluation() {
        let cfg = QclConfig {
            max_iterations: 5,
            ..QclConfig::default()
        };
        let r = qcl_optimize(&cfg, |t, _| Ok(pccm_fidelities(t))).unwrap();
        let mut buf = Vec::new();
        write_qcl_trace_csv(&mut buf, &r.trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,theta,loss,F_AB,F_AE");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,"));
    }
}
