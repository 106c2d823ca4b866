use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// Upper bound on a clock difference: `x_i - x_j < c`, `x_i - x_j <= c`, or no bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite { value: i64, strict: bool },
    Infinity,
}

impl Bound {
    pub const ZERO: Bound = Bound::Finite {
        value: 0,
        strict: false,
    };

    pub const fn le(value: i64) -> Self {
        Bound::Finite {
            value,
            strict: false,
        }
    }

    pub const fn lt(value: i64) -> Self {
        Bound::Finite {
            value,
            strict: true,
        }
    }

    pub fn value(self) -> Option<i64> {
        match self {
            Bound::Finite { value, .. } => Some(value),
            Bound::Infinity => None,
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Bound::Finite { strict: true, .. })
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Bound::Infinity)
    }

    /// Whether `diff` satisfies the bound, with `diff` given as `num / den`.
    pub fn admits(self, num: i64, den: i64) -> bool {
        match self {
            Bound::Infinity => true,
            Bound::Finite { value, strict } => {
                let rhs = value as i128 * den as i128;
                if strict {
                    (num as i128) < rhs
                } else {
                    (num as i128) <= rhs
                }
            }
        }
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Bound::Infinity, Bound::Infinity) => Ordering::Equal,
            (Bound::Infinity, _) => Ordering::Greater,
            (_, Bound::Infinity) => Ordering::Less,
            (
                Bound::Finite {
                    value: a,
                    strict: sa,
                },
                Bound::Finite {
                    value: b,
                    strict: sb,
                },
            ) => a.cmp(b).then_with(|| sb.cmp(sa)),
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Bound {
    type Output = Bound;

    /// Panics on `i64` overflow; constants are validated far below that range.
    fn add(self, rhs: Bound) -> Bound {
        match (self, rhs) {
            (Bound::Infinity, _) | (_, Bound::Infinity) => Bound::Infinity,
            (
                Bound::Finite {
                    value: a,
                    strict: sa,
                },
                Bound::Finite {
                    value: b,
                    strict: sb,
                },
            ) => Bound::Finite {
                value: a.checked_add(b).expect("bound overflow"),
                strict: sa || sb,
            },
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Infinity => write!(f, "<inf"),
            Bound::Finite { value, strict } => {
                write!(f, "{}{value}", if *strict { "<" } else { "<=" })
            }
        }
    }
}
