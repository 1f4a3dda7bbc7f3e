//! Species naming scheme of compiled programs.
//!
//! Indices are 1-based. `l` is the position inside the mini-batch, `i` a
//! sample index, `q` an input coordinate, `n` a neuron (hidden `1..=H`,
//! outputs `H+1..`), `k` a weight index and `j` a bias index.

/// Sign rail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rail {
    Plus,
    Minus,
}

impl Rail {
    pub const BOTH: [Rail; 2] = [Rail::Plus, Rail::Minus];

    pub fn tag(self) -> &'static str {
        match self {
            Rail::Plus => "p",
            Rail::Minus => "m",
        }
    }

    /// Rail of a product of two signed factors.
    pub fn times(self, other: Rail) -> Rail {
        if self == other {
            Rail::Plus
        } else {
            Rail::Minus
        }
    }
}

pub fn sample(i: usize, q: usize) -> String {
    format!("X_{i}_{q}")
}
pub fn label(i: usize) -> String {
    format!("D_{i}")
}
pub fn order(l: usize, i: usize) -> String {
    format!("C_{l}_{i}")
}
pub fn aux_order(l: usize, i: usize) -> String {
    format!("Ct_{l}_{i}")
}
/// Input slot `q` of batch position `l`; `q = I+1` holds the label.
pub fn input(l: usize, q: usize) -> String {
    format!("S_{l}_{q}")
}
pub fn weight(r: Rail, k: usize) -> String {
    format!("W{}_{k}", r.tag())
}
pub fn bias(r: Rail, j: usize) -> String {
    format!("B{}_{j}", r.tag())
}
pub fn net(r: Rail, n: usize, l: usize) -> String {
    format!("N{}_{n}_{l}", r.tag())
}
pub fn half() -> String {
    "Half".into()
}
pub fn hidden_rail(r: Rail, i: usize, l: usize) -> String {
    format!("P{}_{i}_{l}", r.tag())
}
pub fn hidden(i: usize, l: usize) -> String {
    format!("P_{i}_{l}")
}
pub fn output_rail(r: Rail, o: usize, l: usize) -> String {
    format!("Y{}_{o}_{l}", r.tag())
}
pub fn output(o: usize, l: usize) -> String {
    format!("Y_{o}_{l}")
}
pub fn y_err(l: usize) -> String {
    format!("Ye_{l}")
}
pub fn y_sub(l: usize) -> String {
    format!("Ys_{l}")
}
pub fn y_keep(l: usize) -> String {
    format!("Yt_{l}")
}
pub fn unit_y(l: usize) -> String {
    format!("Iy_{l}")
}
pub fn one_minus_y(l: usize) -> String {
    format!("Sy_{l}")
}
pub fn p_sub(i: usize, l: usize) -> String {
    format!("Pis_{i}_{l}")
}
pub fn p_keep(i: usize, l: usize) -> String {
    format!("Pt_{i}_{l}")
}
pub fn unit_p(i: usize, l: usize) -> String {
    format!("Ip_{i}_{l}")
}
pub fn one_minus_p(i: usize, l: usize) -> String {
    format!("Sp_{i}_{l}")
}
pub fn error_rail(r: Rail, l: usize) -> String {
    format!("E{}_{l}", r.tag())
}
pub fn error(l: usize) -> String {
    format!("E_{l}")
}
pub fn judge(l: usize) -> String {
    format!("A_{l}")
}
pub fn gate() -> String {
    "Ca".into()
}
/// Root block `e^σ · p_a`.
pub fn m_err(r: Rail, a: usize, l: usize) -> String {
    format!("ME{}_{a}_{l}", r.tag())
}
/// Root block `y (1 - y)`.
pub fn m_y(l: usize) -> String {
    format!("My_{l}")
}
/// Root block `(1 - p_a) · w^τ`.
pub fn m_w(r: Rail, a: usize, l: usize) -> String {
    format!("MW{}_{a}_{l}", r.tag())
}
pub fn t_err(r: Rail, a: usize, l: usize) -> String {
    format!("TE{}_{a}_{l}", r.tag())
}
pub fn t_w(r: Rail, a: usize, b: usize, l: usize) -> String {
    format!("TW{}_{a}_{b}_{l}", r.tag())
}
/// Leaf monomial for gradient `k` with error rail `s` and weight rail `t`.
pub fn leaf(k: usize, s: Rail, t: Rail, l: usize) -> String {
    format!("Q{k}{}{}_{l}", s.tag(), t.tag())
}
/// Leaf monomial without a weight factor.
pub fn leaf1(k: usize, s: Rail, l: usize) -> String {
    format!("Q{k}{}_{l}", s.tag())
}
pub fn grad(r: Rail, k: usize) -> String {
    format!("Par{}_{k}", r.tag())
}
pub fn d_weight(r: Rail, k: usize) -> String {
    format!("dW{}_{k}", r.tag())
}
pub fn d_bias(r: Rail, j: usize) -> String {
    format!("dB{}_{j}", r.tag())
}
pub fn snapshot(r: Rail, k: usize) -> String {
    format!("G{}_{k}", r.tag())
}
pub fn learning_rate() -> String {
    "L".into()
}
pub fn unit() -> String {
    "I".into()
}
