use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::thermo::EnergyParts;

/// Bit set of row annotations. Printed as `|`-separated names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Flags(pub u16);

impl Flags {
    pub const ACCEPTED: Self = Self(1);
    /// A diagnostic sample was taken after this step.
    pub const OUTPUT: Self = Self(1 << 1);
    pub const SNAPSHOT: Self = Self(1 << 2);
    /// The equilibrium detector fired at this step.
    pub const EQUILIBRIUM: Self = Self(1 << 3);
    pub const REJECT_NEWTON: Self = Self(1 << 4);
    pub const REJECT_LINEAR: Self = Self(1 << 5);
    pub const REJECT_INTERIOR: Self = Self(1 << 6);
    pub const REJECT_COUPLING: Self = Self(1 << 7);
    pub const REJECT_DENSITY: Self = Self(1 << 8);
    pub const REJECT_ENERGY: Self = Self(1 << 9);
    pub const REJECT_DIVERGENCE: Self = Self(1 << 10);
    pub const REJECT_OTHER: Self = Self(1 << 11);

    const NAMES: [(Self, &'static str); 12] = [
        (Self::ACCEPTED, "accepted"),
        (Self::OUTPUT, "output"),
        (Self::SNAPSHOT, "snapshot"),
        (Self::EQUILIBRIUM, "equilibrium"),
        (Self::REJECT_NEWTON, "rejected-newton"),
        (Self::REJECT_LINEAR, "rejected-linear"),
        (Self::REJECT_INTERIOR, "rejected-interior"),
        (Self::REJECT_COUPLING, "rejected-coupling"),
        (Self::REJECT_DENSITY, "rejected-density"),
        (Self::REJECT_ENERGY, "rejected-energy"),
        (Self::REJECT_DIVERGENCE, "rejected-divergence"),
        (Self::REJECT_OTHER, "rejected-other"),
    ];

    pub const REJECTED: Self = Self(0xfff0);

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: Self) {
        self.0 |= other.0;
    }

    pub fn is_accepted(self) -> bool {
        self.contains(Self::ACCEPTED)
    }

    pub fn is_rejected(self) -> bool {
        self.0 & Self::REJECTED.0 != 0
    }

    /// Rejection reason for a failed step.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::NewtonDivergence { .. } => Self::REJECT_NEWTON,
            Error::LinearSolveFailure { .. } => Self::REJECT_LINEAR,
            Error::InteriorViolation | Error::DomainError(_) => Self::REJECT_INTERIOR,
            Error::CouplingFailure { .. } => Self::REJECT_COUPLING,
            Error::DensityFloorViolation { .. } => Self::REJECT_DENSITY,
            Error::EnergyViolation { .. } => Self::REJECT_ENERGY,
            _ => Self::REJECT_OTHER,
        }
    }
}

impl core::ops::BitOr for Flags {
    type Output = Self;

    fn bitor(self, rhs: Self) -> Self {
        Self(self.0 | rhs.0)
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in Self::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        if first {
            f.write_str("none")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for Flags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let mut out = Self::default();
        if s == "none" {
            return Ok(out);
        }
        for part in s.split('|') {
            let (flag, _) = Self::NAMES
                .iter()
                .find(|(_, n)| *n == part)
                .ok_or_else(|| Error::Config(alloc::format!("unknown flag {part:?}")))?;
            out.insert(*flag);
        }
        Ok(out)
    }
}

/// One attempted step. Rejected rows carry `NaN` wherever the attempt
/// produced no value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    /// Time at the end of the step.
    pub t: f64,
    pub e_kin: f64,
    pub e_grad: f64,
    pub e_pot: f64,
    pub e_tot: f64,
    pub diss_visc: f64,
    pub diss_ch: f64,
    pub slack: f64,
    pub sep_margin: f64,
    pub v_norm: f64,
    pub eq_residual: f64,
    pub h: f64,
    pub flags: Flags,
    /// `alpha / 2 ||D v||^2` after the step.
    pub reg: f64,
    /// Dissipation of the implicit time discretization.
    pub numerical: f64,
    /// Work done by a prescribed velocity, `h <T(v), w>`.
    pub work: f64,
    /// Energy tolerance the slack was held to.
    pub tol: f64,
}

impl LedgerRow {
    pub const HEADER: &'static str = "t,E_kin,E_grad,E_pot,E_tot,diss_visc,diss_ch,slack,sep_margin,v_norm,eq_residual,h,flags";

    pub fn rejected(t: f64, h: f64, flags: Flags) -> Self {
        Self {
            t,
            e_kin: f64::NAN,
            e_grad: f64::NAN,
            e_pot: f64::NAN,
            e_tot: f64::NAN,
            diss_visc: f64::NAN,
            diss_ch: f64::NAN,
            slack: f64::NAN,
            sep_margin: f64::NAN,
            v_norm: f64::NAN,
            eq_residual: f64::NAN,
            h,
            flags,
            reg: f64::NAN,
            numerical: f64::NAN,
            work: f64::NAN,
            tol: f64::NAN,
        }
    }

    pub fn set_energy(&mut self, e: &EnergyParts) {
        self.e_kin = e.kinetic;
        self.e_grad = e.gradient;
        self.e_pot = e.potential;
        self.e_tot = e.total();
    }

    /// The CSV columns in header order, flags excluded.
    pub fn numeric_columns(&self) -> [f64; 12] {
        [
            self.t,
            self.e_kin,
            self.e_grad,
            self.e_pot,
            self.e_tot,
            self.diss_visc,
            self.diss_ch,
            self.slack,
            self.sep_margin,
            self.v_norm,
            self.eq_residual,
            self.h,
        ]
    }

    /// Inverse of [`LedgerRow::numeric_columns`]; columns not listed there are `NaN`.
    pub fn from_columns(x: [f64; 12], flags: Flags) -> Self {
        let mut row = Self::rejected(x[0], x[11], flags);
        row.e_kin = x[1];
        row.e_grad = x[2];
        row.e_pot = x[3];
        row.e_tot = x[4];
        row.diss_visc = x[5];
        row.diss_ch = x[6];
        row.slack = x[7];
        row.sep_margin = x[8];
        row.v_norm = x[9];
        row.eq_residual = x[10];
        row
    }
}

/// Every attempted step of a run, in order, plus the initial energy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub initial: EnergyParts,
    /// `alpha / 2 ||D v_0||^2`.
    pub initial_reg: f64,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn accepted(&self) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(|r| r.flags.is_accepted())
    }

    pub fn rejected_count(&self) -> usize {
        self.rows.iter().filter(|r| r.flags.is_rejected()).count()
    }

    /// Accepted rows whose slack falls below their tolerance.
    pub fn violations(&self) -> impl Iterator<Item = &LedgerRow> {
        self.accepted().filter(|r| !(r.slack >= -r.tol))
    }

    /// `(E_0 + reg_0) - (E_end + reg_end)` and the sum of all dissipated
    /// terms, slacks and work over accepted steps; equal up to rounding.
    pub fn telescoping(&self) -> (f64, f64) {
        let start = self.initial.total() + self.initial_reg;
        let mut end = start;
        let mut sum = 0.0;
        for r in self.accepted() {
            end = r.e_tot + r.reg;
            sum += r.diss_visc + r.diss_ch + r.numerical + r.slack + r.work;
        }
        (start - end, sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_round_trip() {
        for f in [Flags::default(), Flags::ACCEPTED | Flags::OUTPUT | Flags::EQUILIBRIUM, Flags::REJECT_ENERGY] {
            assert_eq!(f.to_string().parse::<Flags>().unwrap(), f);
        }
        assert!("accepted|bogus".parse::<Flags>().is_err());
    }

    #[test]
    fn columns_round_trip() {
        let mut r = LedgerRow::rejected(0.3, 1e-3, Flags::ACCEPTED | Flags::OUTPUT);
        r.set_energy(&EnergyParts { kinetic: 1.0 / 7.0, gradient: 2e-3, potential: -0.5 });
        r.slack = -1e-17;
        let back = LedgerRow::from_columns(r.numeric_columns(), r.flags);
        assert_eq!(back.numeric_columns().map(f64::to_bits), r.numeric_columns().map(f64::to_bits));
    }
}
