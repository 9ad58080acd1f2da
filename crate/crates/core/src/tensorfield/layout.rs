use std::fmt;

use super::FieldError;

/// One block of the per-point supertensor.
///
/// `Matrix(d)` is stored row-major, first index slowest. `Sym(d)` is stored
/// packed: the `d` diagonal entries first, then the strictly upper entries
/// row-major, each scaled by `sqrt(2)` (Mandel form) so the plain component
/// sum is the Frobenius inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Scalar,
    Vector(usize),
    Matrix(usize),
    Sym(usize),
}

impl Block {
    pub fn components(&self) -> usize {
        match *self {
            Block::Scalar => 1,
            Block::Vector(d) => d,
            Block::Matrix(d) => d * d,
            Block::Sym(d) => d * (d + 1) / 2,
        }
    }

    /// Spatial dimension carried by the block (1 for scalars).
    pub fn dim(&self) -> usize {
        match *self {
            Block::Scalar => 1,
            Block::Vector(d) | Block::Matrix(d) | Block::Sym(d) => d,
        }
    }

    pub(crate) fn kind_code(&self) -> u8 {
        match self {
            Block::Scalar => 0,
            Block::Vector(_) => 1,
            Block::Matrix(_) => 2,
            Block::Sym(_) => 3,
        }
    }

    pub(crate) fn from_code(kind: u8, d: usize) -> Option<Self> {
        match (kind, d) {
            (0, 0 | 1) => Some(Block::Scalar),
            (1, d) if d >= 1 => Some(Block::Vector(d)),
            (2, d) if d >= 1 => Some(Block::Matrix(d)),
            (3, d) if d >= 1 => Some(Block::Sym(d)),
            _ => None,
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Scalar => write!(f, "scalar"),
            Block::Vector(d) => write!(f, "vector({d})"),
            Block::Matrix(d) => write!(f, "matrix({d}x{d})"),
            Block::Sym(d) => write!(f, "sym({d})"),
        }
    }
}

/// Ordered list of blocks making up one grid-point value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockLayout {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockLayout {
    pub fn new(blocks: Vec<Block>) -> Result<Self, FieldError> {
        if blocks.is_empty() {
            return Err(FieldError::Shape("layout needs at least one block".into()));
        }
        for b in &blocks {
            if b.components() == 0 {
                return Err(FieldError::Shape(format!("block {b} has zero size")));
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for b in &blocks {
            offsets.push(total);
            total += b.components();
        }
        Ok(Self {
            blocks,
            offsets,
            total,
        })
    }

    /// `(Vector(d), Scalar)`: gradient plus potential.
    pub fn vector_scalar(d: usize) -> Self {
        Self::new(vec![Block::Vector(d), Block::Scalar]).expect("valid layout")
    }

    /// `(Matrix(d), Vector(d))`: full gradient of a vector plus the vector.
    pub fn matrix_vector(d: usize) -> Self {
        Self::new(vec![Block::Matrix(d), Block::Vector(d)]).expect("valid layout")
    }

    pub fn scalar() -> Self {
        Self::new(vec![Block::Scalar]).expect("valid layout")
    }

    #[inline]
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    #[inline]
    pub fn total_components(&self) -> usize {
        self.total
    }

    /// Component range occupied by block `b`.
    pub fn range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b] + self.blocks[b].components()
    }

    pub fn offset(&self, b: usize) -> usize {
        self.offsets[b]
    }
}

impl fmt::Display for BlockLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Index pairs `(i, j)` of the packed symmetric components, in storage order.
pub fn sym_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..d).map(|i| (i, i)).collect();
    for i in 0..d {
        for j in i + 1..d {
            out.push((i, j));
        }
    }
    out
}
