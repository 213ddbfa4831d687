//! DIMACS CNF input, exactly-3 normalization and the exhaustive SAT oracle.
//!
//! The oracle here is deliberately naive. It is the ground truth the track
//! reduction is judged against, so it must stay independent of the track
//! engine and obviously correct.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default cap on the number of variables the exhaustive oracle accepts.
pub const DEFAULT_ORACLE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A variable (1-based) together with its polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    variable: u32,
    polarity: Polarity,
}

impl Literal {
    /// Panics if `variable` is zero.
    pub fn new(variable: u32, polarity: Polarity) -> Self {
        assert!(variable >= 1, "literal variables are 1-based");
        Literal { variable, polarity }
    }

    pub fn positive(variable: u32) -> Self {
        Literal::new(variable, Polarity::Positive)
    }

    pub fn negative(variable: u32) -> Self {
        Literal::new(variable, Polarity::Negative)
    }

    /// Builds a literal from its signed DIMACS encoding. Returns `None` for 0.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 || value.unsigned_abs() > u64::from(u32::MAX) {
            return None;
        }
        let variable = value.unsigned_abs() as u32;
        let polarity = if value > 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        Some(Literal { variable, polarity })
    }

    pub fn to_dimacs(self) -> i64 {
        match self.polarity {
            Polarity::Positive => i64::from(self.variable),
            Polarity::Negative => -i64::from(self.variable),
        }
    }

    pub fn variable(self) -> u32 {
        self.variable
    }

    pub fn polarity(self) -> Polarity {
        self.polarity
    }

    pub fn is_positive(self) -> bool {
        self.polarity == Polarity::Positive
    }

    pub fn negated(self) -> Self {
        let polarity = match self.polarity {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        };
        Literal { polarity, ..self }
    }

    /// Truth value under `assignment`. Variables outside the assignment are
    /// read as false.
    pub fn eval(self, assignment: &Assignment) -> bool {
        assignment.value(self.variable) == self.is_positive()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of exactly three literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Clause {
    pub literals: [Literal; 3],
}

impl Clause {
    pub fn new(a: Literal, b: Literal, c: Literal) -> Self {
        Clause {
            literals: [a, b, c],
        }
    }

    pub fn eval(&self, assignment: &Assignment) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }
}

/// A 3-CNF instance. Clause order is significant: it fixes slot and layout
/// order in the compiled track.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Formula {
    num_variables: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(num_variables: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        for clause in &clauses {
            for lit in clause.literals {
                if lit.variable() as usize > num_variables {
                    return Err(CnfError::UndeclaredVariable {
                        variable: lit.variable() as usize,
                        declared: num_variables,
                    });
                }
            }
        }
        Ok(Formula {
            num_variables,
            clauses,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn eval(&self, assignment: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.eval(assignment))
    }

    pub fn to_raw(&self) -> RawFormula {
        RawFormula {
            num_variables: self.num_variables,
            clauses: self.clauses.iter().map(|c| c.literals.to_vec()).collect(),
        }
    }
}

impl fmt::Display for Formula {
    /// Canonical DIMACS text.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.num_variables, self.clauses.len())?;
        for clause in &self.clauses {
            let [a, b, c] = clause.literals;
            writeln!(f, "{a} {b} {c} 0")?;
        }
        Ok(())
    }
}

impl FromStr for Formula {
    type Err = CnfError;

    /// Parses DIMACS text that is already exactly 3-CNF.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = parse_dimacs(s)?;
        raw.clauses
            .iter()
            .enumerate()
            .map(|(index, lits)| match lits.as_slice() {
                [a, b, c] => Ok(Clause::new(*a, *b, *c)),
                _ => Err(CnfError::NotThreeCnf {
                    clause: index,
                    width: lits.len(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()
            .and_then(|clauses| Formula::new(raw.num_variables, clauses))
    }
}

/// Clauses of arbitrary width, exactly as read from a DIMACS file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawFormula {
    pub num_variables: usize,
    pub clauses: Vec<Vec<Literal>>,
}

impl RawFormula {
    /// An empty clause makes the formula unsatisfiable outright.
    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Vec::is_empty)
    }

    pub fn eval(&self, assignment: &Assignment) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(assignment)))
    }
}

impl fmt::Display for RawFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.num_variables, self.clauses.len())?;
        for clause in &self.clauses {
            for lit in clause {
                write!(f, "{lit} ")?;
            }
            writeln!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: `{token}` is not an integer literal")]
    BadToken { line: usize, token: String },
    #[error("line {line}: variable {variable} exceeds declared count {declared}")]
    VariableOutOfRange {
        variable: usize,
        declared: usize,
        line: usize,
    },
    #[error("variable {variable} exceeds the formula's {declared} variables")]
    UndeclaredVariable { variable: usize, declared: usize },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("clause {clause} has {width} literals, expected exactly 3")]
    NotThreeCnf { clause: usize, width: usize },
    #[error("{variables} variables exceed the exhaustive oracle limit of {limit}")]
    OracleLimit { variables: usize, limit: usize },
}


/// Reads DIMACS CNF. Clause widths are kept as written; an empty clause is
/// returned as data (see [`RawFormula::has_empty_clause`]).
pub fn parse_dimacs(text: &str) -> Result<RawFormula, CnfError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut in_clause = false;

    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        // SATLIB files end with a `%` marker followed by a stray `0`.
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::MalformedHeader {
                    line: line_no,
                    reason: "duplicate header".into(),
                });
            }
            header = Some(parse_header(trimmed, line_no)?);
            continue;
        }
        let Some((declared_vars, _)) = header else {
            return Err(CnfError::MissingHeader);
        };
        for token in trimmed.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| CnfError::BadToken {
                line: line_no,
                token: token.to_string(),
            })?;
            match Literal::from_dimacs(value) {
                None if value == 0 => {
                    clauses.push(std::mem::take(&mut current));
                    in_clause = false;
                }
                None => {
                    return Err(CnfError::BadToken {
                        line: line_no,
                        token: token.to_string(),
                    })
                }
                Some(lit) => {
                    if lit.variable() as usize > declared_vars {
                        return Err(CnfError::VariableOutOfRange {
                            variable: lit.variable() as usize,
                            declared: declared_vars,
                            line: line_no,
                        });
                    }
                    current.push(lit);
                    in_clause = true;
                }
            }
        }
    }

    let (num_variables, declared_clauses) = header.ok_or(CnfError::MissingHeader)?;
    if in_clause {
        return Err(CnfError::UnterminatedClause);
    }
    if clauses.len() != declared_clauses {
        return Err(CnfError::ClauseCountMismatch {
            declared: declared_clauses,
            found: clauses.len(),
        });
    }
    Ok(RawFormula {
        num_variables,
        clauses,
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), CnfError> {
    let malformed = |reason: &str| CnfError::MalformedHeader {
        line: line_no,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["p", "cnf", vars, clauses] => {
            let vars = vars
                .parse()
                .map_err(|_| malformed("variable count is not a non-negative integer"))?;
            let clauses = clauses
                .parse()
                .map_err(|_| malformed("clause count is not a non-negative integer"))?;
            Ok((vars, clauses))
        }
        ["p", format, ..] if *format != "cnf" => Err(malformed("only the `cnf` format is supported")),
        _ => Err(malformed("expected `p cnf <variables> <clauses>`")),
    }
}

/// A 3-CNF formula produced by [`normalize_to_3cnf`], remembering which
/// variables are fresh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub formula: Formula,
    /// Variables `1..=original_variables` come from the input; the rest are fresh.
    pub original_variables: usize,
}

impl Normalized {
    pub fn fresh_variables(&self) -> usize {
        self.formula.num_variables() - self.original_variables
    }

    /// Drops the fresh variables from an assignment of the normalized formula.
    pub fn project(&self, assignment: &Assignment) -> Assignment {
        Assignment::new(
            (1..=self.original_variables as u32)
                .map(|v| assignment.value(v))
                .collect(),
        )
    }
}

/// Rewrites every clause to exactly three literals.
///
/// Short clauses are padded by repeating their literals, long clauses are
/// split with the chain transformation
/// `(l1 ∨ l2 ∨ y1) ∧ (¬y1 ∨ l3 ∨ y2) ∧ … ∧ (¬yk ∨ l(n-1) ∨ ln)`, and an empty
/// clause becomes the contradiction `(y) ∧ (¬y)` over a fresh `y`. Fresh
/// variables are numbered above the input's variable count, in clause order.
pub fn normalize_to_3cnf(raw: &RawFormula) -> Normalized {
    let original = raw.num_variables;
    let mut next_fresh = original as u32;
    let mut fresh = || {
        next_fresh += 1;
        next_fresh
    };
    let mut clauses = Vec::with_capacity(raw.clauses.len());

    for lits in &raw.clauses {
        match lits.as_slice() {
            [] => {
                let y = fresh();
                clauses.push(Clause::new(
                    Literal::positive(y),
                    Literal::positive(y),
                    Literal::positive(y),
                ));
                clauses.push(Clause::new(
                    Literal::negative(y),
                    Literal::negative(y),
                    Literal::negative(y),
                ));
            }
            [a] => clauses.push(Clause::new(*a, *a, *a)),
            [a, b] => clauses.push(Clause::new(*a, *b, *b)),
            [a, b, c] => clauses.push(Clause::new(*a, *b, *c)),
            [first, second, middle @ .., before_last, last] => {
                let mut link = Literal::positive(fresh());
                clauses.push(Clause::new(*first, *second, link));
                for lit in middle {
                    let next = Literal::positive(fresh());
                    clauses.push(Clause::new(link.negated(), *lit, next));
                    link = next;
                }
                clauses.push(Clause::new(link.negated(), *before_last, *last));
            }
        }
    }

    let formula = Formula {
        num_variables: next_fresh as usize,
        clauses,
    };
    Normalized {
        formula,
        original_variables: original,
    }
}

/// One truth value per variable, variable 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn all_false(num_variables: usize) -> Self {
        Assignment::new(vec![false; num_variables])
    }

    /// Bit `i` of `bits` is variable `i + 1`.
    pub fn from_bits(bits: u64, num_variables: usize) -> Self {
        Assignment::new((0..num_variables).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Variables beyond the assignment's length read as false.
    pub fn value(&self, variable: u32) -> bool {
        variable
            .checked_sub(1)
            .and_then(|i| self.values.get(i as usize))
            .copied()
            .unwrap_or(false)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

impl fmt::Display for Assignment {
    /// `v 1 -2 3 0`, the SAT-competition value line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v")?;
        for (i, &value) in self.values.iter().enumerate() {
            let var = i as i64 + 1;
            write!(f, " {}", if value { var } else { -var })?;
        }
        writeln!(f, " 0")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentParseError {
    #[error("`{0}` is not an integer literal")]
    BadToken(String),
    #[error("variable {0} is listed more than once")]
    Duplicate(u32),
    #[error("variable {0} is missing")]
    Missing(u32),
}

impl FromStr for Assignment {
    type Err = AssignmentParseError;

    /// Accepts one or more `v` lines (the prefix is optional). Every variable
    /// from 1 up to the largest listed one must appear exactly once.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut seen: Vec<Option<bool>> = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('s') {
                continue;
            }
            for token in line.split_whitespace() {
                if token == "v" {
                    continue;
                }
                let value: i64 = token
                    .parse()
                    .map_err(|_| AssignmentParseError::BadToken(token.to_string()))?;
                let Some(lit) = Literal::from_dimacs(value) else {
                    if value == 0 {
                        continue;
                    }
                    return Err(AssignmentParseError::BadToken(token.to_string()));
                };
                let index = lit.variable() as usize - 1;
                if seen.len() <= index {
                    seen.resize(index + 1, None);
                }
                if seen[index].replace(lit.is_positive()).is_some() {
                    return Err(AssignmentParseError::Duplicate(lit.variable()));
                }
            }
        }
        seen.iter()
            .enumerate()
            .map(|(i, v)| v.ok_or(AssignmentParseError::Missing(i as u32 + 1)))
            .collect::<Result<Vec<_>, _>>()
            .map(Assignment::new)
    }
}

/// [`sat_oracle_with_limit`] with the default variable cap.
pub fn sat_oracle(formula: &Formula) -> Result<Option<Assignment>, CnfError> {
    sat_oracle_with_limit(formula, DEFAULT_ORACLE_LIMIT)
}

/// Exhaustive search. Assignments are enumerated as binary counters with
/// variable 1 in the least significant bit, so all-false comes first and the
/// result is the first satisfying assignment in that order.
pub fn sat_oracle_with_limit(
    formula: &Formula,
    limit: usize,
) -> Result<Option<Assignment>, CnfError> {
    let n = formula.num_variables();
    if n > limit || n > 63 {
        return Err(CnfError::OracleLimit {
            variables: n,
            limit: limit.min(63),
        });
    }
    let masks: Vec<(u64, u64)> = formula
        .clauses()
        .iter()
        .map(|clause| {
            clause.literals.iter().fold((0u64, 0u64), |(pos, neg), lit| {
                let bit = 1u64 << (lit.variable() - 1);
                if lit.is_positive() {
                    (pos | bit, neg)
                } else {
                    (pos, neg | bit)
                }
            })
        })
        .collect();
    let found = (0u64..1 << n)
        .find(|&bits| masks.iter().all(|&(pos, neg)| bits & pos != 0 || !bits & neg != 0));
    Ok(found.map(|bits| Assignment::from_bits(bits, n)))
}
