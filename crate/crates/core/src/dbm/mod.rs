//! Difference bound matrices over a dynamic, ordered set of clocks.
//!
//! Row and column 0 belong to the reference clock, which is always zero, so
//! `mat[i][0]` is the upper bound of clock `i` and `mat[0][i]` the negated lower
//! bound. Clocks are kept sorted by identifier; a zone's dimension changes as
//! clocks are added and removed.

mod bound;

use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

pub use bound::Bound;

/// A clock, identified by the index of the transition it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockId(pub usize);

impl fmt::Display for ClockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0 + 1)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DbmError {
    #[error("operation requires a non-empty zone")]
    EmptyZone,
    #[error("clock {0} is not in the zone")]
    UnknownClock(ClockId),
    #[error("clock {0} is already in the zone")]
    DuplicateClock(ClockId),
    #[error("zones range over different clock sets")]
    ClockSetMismatch,
}

/// Atomic constraint `left - right ≺ c`, where `None` is the reference clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub left: Option<ClockId>,
    pub right: Option<ClockId>,
    pub bound: Bound,
}

impl Constraint {
    /// `x ≺ c` with the strictness carried by `bound`.
    pub fn upper(x: ClockId, bound: Bound) -> Self {
        Self {
            left: Some(x),
            right: None,
            bound,
        }
    }

    pub fn le(x: ClockId, c: i64) -> Self {
        Self::upper(x, Bound::le(c))
    }

    pub fn lt(x: ClockId, c: i64) -> Self {
        Self::upper(x, Bound::lt(c))
    }

    pub fn ge(x: ClockId, c: i64) -> Self {
        Self {
            left: None,
            right: Some(x),
            bound: Bound::le(-c),
        }
    }

    pub fn gt(x: ClockId, c: i64) -> Self {
        Self {
            left: None,
            right: Some(x),
            bound: Bound::lt(-c),
        }
    }

    /// `x - y ≺ c`.
    pub fn diff(x: ClockId, y: ClockId, bound: Bound) -> Self {
        Self {
            left: Some(x),
            right: Some(y),
            bound,
        }
    }
}

/// A convex set of clock valuations.
#[derive(Clone, Debug)]
pub struct Zone {
    clocks: Vec<ClockId>,
    mat: Vec<Bound>,
    canonical: bool,
}

impl PartialEq for Zone {
    fn eq(&self, other: &Self) -> bool {
        self.clocks == other.clocks && self.mat == other.mat
    }
}

impl Eq for Zone {}

impl Hash for Zone {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.clocks.hash(state);
        self.mat.hash(state);
    }
}

const EMPTY_MARK: Bound = Bound::lt(0);

impl Zone {
    fn sorted(clocks: &[ClockId]) -> Result<Vec<ClockId>, DbmError> {
        let mut v = clocks.to_vec();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(DbmError::DuplicateClock(w[0]));
        }
        Ok(v)
    }

    /// All clocks equal to zero.
    pub fn zero(clocks: &[ClockId]) -> Result<Self, DbmError> {
        let clocks = Self::sorted(clocks)?;
        let dim = clocks.len() + 1;
        Ok(Self {
            clocks,
            mat: vec![Bound::ZERO; dim * dim],
            canonical: true,
        })
    }

    /// Every non-negative valuation.
    pub fn unconstrained(clocks: &[ClockId]) -> Result<Self, DbmError> {
        let clocks = Self::sorted(clocks)?;
        let dim = clocks.len() + 1;
        let mut mat = vec![Bound::Infinity; dim * dim];
        for j in 0..dim {
            mat[j] = Bound::ZERO;
            mat[j * dim + j] = Bound::ZERO;
        }
        Ok(Self {
            clocks,
            mat,
            canonical: true,
        })
    }

    /// Intersection of the non-negative orthant with `constraints`, canonical.
    pub fn from_constraints(
        clocks: &[ClockId],
        constraints: &[Constraint],
    ) -> Result<Self, DbmError> {
        let mut z = Self::unconstrained(clocks)?;
        for c in constraints {
            let (i, j) = z.indices(c)?;
            if c.bound < z.get(i, j) {
                z.set(i, j, c.bound);
                z.canonical = false;
            }
        }
        Ok(z.canonicalize())
    }

    /// Builds a zone from a raw row-major matrix of dimension `clocks.len() + 1`.
    /// The result is not assumed canonical.
    pub fn from_matrix(clocks: &[ClockId], mat: Vec<Bound>) -> Result<Self, DbmError> {
        let clocks = Self::sorted(clocks)?;
        let dim = clocks.len() + 1;
        assert_eq!(mat.len(), dim * dim, "matrix dimension mismatch");
        Ok(Self {
            clocks,
            mat,
            canonical: false,
        })
    }

    /// Number of rows, including the reference clock.
    pub fn dim(&self) -> usize {
        self.clocks.len() + 1
    }

    pub fn clocks(&self) -> &[ClockId] {
        &self.clocks
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Matrix index of `x` (1-based; 0 is the reference clock).
    pub fn index_of(&self, x: ClockId) -> Option<usize> {
        self.clocks.binary_search(&x).ok().map(|i| i + 1)
    }

    fn require(&self, x: ClockId) -> Result<usize, DbmError> {
        self.index_of(x).ok_or(DbmError::UnknownClock(x))
    }

    fn indices(&self, c: &Constraint) -> Result<(usize, usize), DbmError> {
        let side = |x: Option<ClockId>| x.map_or(Ok(0), |x| self.require(x));
        Ok((side(c.left)?, side(c.right)?))
    }

    /// Bound on `x_i - x_j` by matrix index.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.mat[i * self.dim() + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, b: Bound) {
        let dim = self.dim();
        self.mat[i * dim + j] = b;
    }

    fn mark_empty(&mut self) {
        self.mat.iter_mut().for_each(|b| *b = EMPTY_MARK);
        self.canonical = true;
    }

    /// Shortest-path closure. Empty zones are normalised to a single representation.
    pub fn canonicalize(mut self) -> Self {
        if self.canonical {
            return self;
        }
        let dim = self.dim();
        for k in 0..dim {
            for i in 0..dim {
                let ik = self.get(i, k);
                if ik.is_infinite() {
                    continue;
                }
                for j in 0..dim {
                    let cand = ik + self.get(k, j);
                    if cand < self.get(i, j) {
                        self.set(i, j, cand);
                    }
                }
            }
            if (0..dim).any(|i| self.get(i, i) < Bound::ZERO) {
                self.mark_empty();
                return self;
            }
        }
        self.canonical = true;
        self
    }

    /// True iff no valuation satisfies the zone.
    pub fn is_empty(&self) -> bool {
        if self.canonical {
            self.get(0, 0) < Bound::ZERO
        } else {
            self.clone().canonicalize().is_empty()
        }
    }

    fn non_empty_canonical(self) -> Result<Self, DbmError> {
        let z = self.canonicalize();
        if z.is_empty() {
            Err(DbmError::EmptyZone)
        } else {
            Ok(z)
        }
    }

    /// Removes all upper bounds: the set of valuations reachable by letting time elapse.
    pub fn future(self) -> Result<Self, DbmError> {
        let mut z = self.non_empty_canonical()?;
        for i in 1..z.dim() {
            z.set(i, 0, Bound::Infinity);
        }
        Ok(z)
    }

    /// Intersects with one atomic constraint, keeping canonical form.
    pub fn constrain(self, c: Constraint) -> Result<Self, DbmError> {
        let (i, j) = self.indices(&c)?;
        let mut z = self.canonicalize();
        if z.is_empty() || c.bound >= z.get(i, j) {
            return Ok(z);
        }
        if z.get(j, i) + c.bound < Bound::ZERO {
            z.mark_empty();
            return Ok(z);
        }
        z.set(i, j, c.bound);
        let dim = z.dim();
        for p in 0..dim {
            let pi = z.get(p, i);
            if pi.is_infinite() {
                continue;
            }
            for q in 0..dim {
                let cand = pi + c.bound + z.get(j, q);
                if cand < z.get(p, q) {
                    z.set(p, q, cand);
                }
            }
        }
        Ok(z)
    }

    /// Sets every clock in `to_zero` to 0.
    pub fn reset(self, to_zero: &[ClockId]) -> Result<Self, DbmError> {
        let idx: Vec<usize> = to_zero
            .iter()
            .map(|&x| self.require(x))
            .collect::<Result<_, _>>()?;
        let mut z = self.non_empty_canonical()?;
        let dim = z.dim();
        for x in idx {
            for j in 0..dim {
                let row = z.get(0, j);
                z.set(x, j, row);
                let col = z.get(j, 0);
                z.set(j, x, col);
            }
            z.set(x, x, Bound::ZERO);
        }
        Ok(z)
    }

    /// Existential projection: forgets clock `x`.
    pub fn remove_clock(self, x: ClockId) -> Result<Self, DbmError> {
        let r = self.require(x)?;
        let z = self.canonicalize();
        let dim = z.dim();
        let mut mat = Vec::with_capacity((dim - 1) * (dim - 1));
        for i in (0..dim).filter(|&i| i != r) {
            for j in (0..dim).filter(|&j| j != r) {
                mat.push(z.get(i, j));
            }
        }
        let mut clocks = z.clocks;
        clocks.remove(r - 1);
        let empty = mat.first().is_some_and(|b| *b < Bound::ZERO);
        let mut out = Self {
            clocks,
            mat,
            canonical: true,
        };
        if empty {
            out.mark_empty();
        }
        Ok(out)
    }

    /// Adds `x` constrained only by `x >= 0`.
    pub fn add_clock(self, x: ClockId) -> Result<Self, DbmError> {
        if self.index_of(x).is_some() {
            return Err(DbmError::DuplicateClock(x));
        }
        let z = self.canonicalize();
        let empty = z.is_empty();
        let pos = z.clocks.partition_point(|&c| c < x) + 1;
        let old_dim = z.dim();
        let dim = old_dim + 1;
        let old = |i: usize| if i < pos { i } else { i - 1 };
        let mut mat = vec![Bound::Infinity; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                mat[i * dim + j] = match (i == pos, j == pos) {
                    (true, true) => Bound::ZERO,
                    // x - x_j: unbounded above, except x - 0 which is too
                    (true, false) => Bound::Infinity,
                    // x_i - x <= x_i, since x >= 0
                    (false, true) => z.get(old(i), 0),
                    (false, false) => z.get(old(i), old(j)),
                };
            }
        }
        mat[pos] = Bound::ZERO;
        let mut clocks = z.clocks;
        clocks.insert(pos - 1, x);
        let mut out = Self {
            clocks,
            mat,
            canonical: true,
        };
        if empty {
            out.mark_empty();
        }
        Ok(out)
    }

    /// `inner ⊆ self`; both zones must range over the same clocks.
    pub fn includes(&self, inner: &Zone) -> Result<bool, DbmError> {
        if self.clocks != inner.clocks {
            return Err(DbmError::ClockSetMismatch);
        }
        let outer = self.clone().canonicalize();
        let inner = inner.clone().canonicalize();
        if inner.is_empty() {
            return Ok(true);
        }
        if outer.is_empty() {
            return Ok(false);
        }
        Ok(inner.mat.iter().zip(&outer.mat).all(|(a, b)| a <= b))
    }

    /// Diagonal-free extrapolation with a single constant `k`: bounds above `k`
    /// are dropped and bounds below `-k` are relaxed to `< -k`.
    pub fn k_approx(self, k: i64) -> Result<Self, DbmError> {
        let mut z = self.non_empty_canonical()?;
        let dim = z.dim();
        let mut changed = false;
        for i in 0..dim {
            for j in 0..dim {
                if i == j {
                    continue;
                }
                if let Some(c) = z.get(i, j).value() {
                    if c > k {
                        z.set(i, j, Bound::Infinity);
                        changed = true;
                    } else if c < -k {
                        z.set(i, j, Bound::lt(-k));
                        changed = true;
                    }
                }
            }
        }
        if changed {
            z.canonical = false;
        }
        Ok(z.canonicalize())
    }

    /// Tightest interval of `x`. The lower bound is returned as a [`Bound`] on `-x`
    /// negated back, i.e. `Finite { value: c, strict }` means `x >= c` (or `x > c`).
    pub fn project_interval(&self, x: ClockId) -> Result<(Bound, Bound), DbmError> {
        let i = self.require(x)?;
        let z = self.clone().non_empty_canonical()?;
        let lower = match z.get(0, i) {
            Bound::Finite { value, strict } => Bound::Finite {
                value: -value,
                strict,
            },
            Bound::Infinity => Bound::le(0),
        };
        Ok((lower, z.get(i, 0)))
    }
}

fn write_interval(
    f: &mut fmt::Formatter<'_>,
    term: &str,
    lower: Option<Bound>,
    upper: Option<Bound>,
) -> fmt::Result {
    let op = |b: Bound| if b.is_strict() { "<" } else { "<=" };
    match (lower, upper) {
        (Some(l), Some(u)) if l == u && !l.is_strict() => {
            write!(f, "{term} = {}", l.value().unwrap())
        }
        (Some(l), Some(u)) => write!(
            f,
            "{} {} {term} {} {}",
            l.value().unwrap(),
            op(l),
            op(u),
            u.value().unwrap()
        ),
        (Some(l), None) => write!(
            f,
            "{term} {} {}",
            if l.is_strict() { ">" } else { ">=" },
            l.value().unwrap()
        ),
        (None, Some(u)) => write!(f, "{term} {} {}", op(u), u.value().unwrap()),
        (None, None) => Ok(()),
    }
}

/// Conjunction of atomic constraints of the canonical form: clock differences
/// first, then per-clock intervals, ordered by clock. Differences already implied
/// by the two clocks' individual bounds are omitted, as are `x >= 0` and `x < inf`.
impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let z = self.clone().canonicalize();
        if z.is_empty() {
            return write!(f, "false");
        }
        let negate = |b: Bound| match b {
            Bound::Finite { value, strict } => Bound::Finite {
                value: -value,
                strict,
            },
            Bound::Infinity => Bound::Infinity,
        };
        let mut parts: Vec<String> = Vec::new();
        let mut render = |term: String, lower: Option<Bound>, upper: Option<Bound>| {
            if lower.is_some() || upper.is_some() {
                parts.push(
                    Interval {
                        term: &term,
                        lower,
                        upper,
                    }
                    .to_string(),
                );
            }
        };
        let dim = z.dim();
        for i in 1..dim {
            for j in i + 1..dim {
                let up = z.get(i, j);
                let up = (!up.is_infinite() && up != z.get(i, 0) + z.get(0, j)).then_some(up);
                let lo = z.get(j, i);
                let lo =
                    (!lo.is_infinite() && lo != z.get(j, 0) + z.get(0, i)).then_some(negate(lo));
                render(format!("{} - {}", z.clocks[i - 1], z.clocks[j - 1]), lo, up);
            }
        }
        for i in 1..dim {
            let up = z.get(i, 0);
            let up = (!up.is_infinite()).then_some(up);
            let lo = z.get(0, i);
            let lo = (lo != Bound::ZERO || up == Some(Bound::ZERO)).then_some(negate(lo));
            render(z.clocks[i - 1].to_string(), lo, up);
        }
        if parts.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", parts.join(" & "))
        }
    }
}

struct Interval<'a> {
    term: &'a str,
    lower: Option<Bound>,
    upper: Option<Bound>,
}

impl fmt::Display for Interval<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_interval(f, self.term, self.lower, self.upper)
    }
}
