use num_integer::Integer;

use super::{Latest, Marking, NetError, Rational, TimePetriNet};

/// Bound magnitude above which scaled constants are rejected, keeping every
/// zone closure sum far from `i64` overflow.
const MAX_SCALED: i64 = 1 << 40;

/// A net whose firing bounds have been multiplied by a common factor so that
/// every finite bound is an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledNet {
    base: TimePetriNet,
    scale: i64,
    eft: Vec<i64>,
    lft: Vec<Option<i64>>,
    k: i64,
}

impl ScaledNet {
    /// Scales by the least common multiple of all finite bound denominators.
    pub fn new(net: TimePetriNet) -> Result<Self, NetError> {
        let mut scale: i64 = 1;
        for t in net.transitions() {
            scale = scale.lcm(t.eft.denom());
            if let Latest::Finite(l) = t.lft {
                scale = scale.lcm(l.denom());
            }
            if scale > MAX_SCALED {
                return Err(NetError::Validation("time scale factor too large".into()));
            }
        }
        let to_int = |v: Rational| -> Result<i64, NetError> {
            let scaled = v
                .numer()
                .checked_mul(scale / v.denom())
                .filter(|x| *x <= MAX_SCALED)
                .ok_or_else(|| NetError::Validation(format!("time bound {v} too large")))?;
            Ok(scaled)
        };
        let mut eft = Vec::new();
        let mut lft = Vec::new();
        for t in net.transitions() {
            eft.push(to_int(t.eft)?);
            lft.push(t.lft.finite().map(to_int).transpose()?);
        }
        let k = eft
            .iter()
            .copied()
            .chain(lft.iter().flatten().copied())
            .max()
            .unwrap_or(0);
        Ok(Self {
            base: net,
            scale,
            eft,
            lft,
            k,
        })
    }

    pub fn net(&self) -> &TimePetriNet {
        &self.base
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    /// Largest finite scaled constant; the extrapolation threshold.
    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn eft(&self, t: usize) -> i64 {
        self.eft[t]
    }

    /// `None` for an unbounded latest firing time.
    pub fn lft(&self, t: usize) -> Option<i64> {
        self.lft[t]
    }

    pub fn transition_count(&self) -> usize {
        self.eft.len()
    }

    /// Converts a scaled time value back to net units.
    pub fn unscale(&self, v: i64) -> Rational {
        Rational::new(v, self.scale)
    }

    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        self.base.enabled(m)
    }
}
