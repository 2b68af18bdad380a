//! Reader and writer for the QPS format (MPS plus a quadratic objective
//! section), as used by the Maros–Mészáros test set.
//!
//! Lines are split on whitespace, so both fixed and free layouts load as long
//! as names contain no spaces. `QUADOBJ` lists the lower triangle of `Q` in
//! the `½xᵀQx` convention; `QMATRIX` lists the full matrix and only its lower
//! triangle is read.

use std::collections::HashMap;
use std::fmt::Write as _;

use halqp::{Bounds, CsrMatrix, QpProblem, QuadOperator, SymmetricMatrix};

/// Values at or beyond this magnitude in RHS, RANGES and BOUNDS mean "no bound".
pub const INFINITY_THRESHOLD: f64 = 1e30;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Section {
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    QuadObj,
}

impl std::fmt::Display for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Section::Name => "NAME",
            Section::ObjSense => "OBJSENSE",
            Section::Rows => "ROWS",
            Section::Columns => "COLUMNS",
            Section::Rhs => "RHS",
            Section::Ranges => "RANGES",
            Section::Bounds => "BOUNDS",
            Section::QuadObj => "QUADOBJ",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line} ({section}): {message}")]
    Syntax {
        line: usize,
        section: String,
        message: String,
    },
    #[error("line {line}: unsupported section or marker `{what}`")]
    UnsupportedSection { line: usize, what: String },
    #[error("missing ENDATA")]
    Truncated,
    #[error("assembled problem is invalid: {0}")]
    Invalid(#[from] halqp::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    L,
    G,
    E,
}

/// A parsed document: the problem plus names for writing it back.
#[derive(Debug, Clone, PartialEq)]
pub struct QpsDocument {
    pub name: String,
    pub problem: QpProblem<f64>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

pub fn parse_qps(text: &str) -> Result<QpProblem<f64>, ParseError> {
    parse_qps_document(text).map(|d| d.problem)
}

struct Parser {
    name: String,
    objective: Option<String>,
    free_rows: Vec<String>,
    rows: Vec<(String, RowKind)>,
    row_index: HashMap<String, usize>,
    cols: Vec<String>,
    col_index: HashMap<String, usize>,
    cost: Vec<f64>,
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    offset: f64,
    ranges: Vec<Option<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    quad: Vec<(usize, usize, f64)>,
}

fn syntax(line: usize, section: &Section, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        section: section.to_string(),
        message: message.into(),
    }
}

fn number(line: usize, section: &Section, token: &str) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| syntax(line, section, format!("expected a number, found `{token}`")))?;
    if v.is_nan() {
        return Err(syntax(line, section, "NaN value"));
    }
    Ok(v)
}

/// Like [`number`], reading magnitudes of `1e30` and above as infinite.
fn bound(line: usize, section: &Section, token: &str) -> Result<f64, ParseError> {
    let v = number(line, section, token)?;
    Ok(if v.abs() >= INFINITY_THRESHOLD { v.signum() * f64::INFINITY } else { v })
}

impl Parser {
    fn new() -> Self {
        Parser {
            name: String::new(),
            objective: None,
            free_rows: Vec::new(),
            rows: Vec::new(),
            row_index: HashMap::new(),
            cols: Vec::new(),
            col_index: HashMap::new(),
            cost: Vec::new(),
            entries: Vec::new(),
            rhs: Vec::new(),
            offset: 0.0,
            ranges: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            quad: Vec::new(),
        }
    }

    fn column(&self, line: usize, section: &Section, name: &str) -> Result<usize, ParseError> {
        self.col_index
            .get(name)
            .copied()
            .ok_or_else(|| syntax(line, section, format!("unknown column `{name}`")))
    }

    /// `Some(Some(i))` for constraint row `i`, `Some(None)` for the objective
    /// or a dropped free row.
    fn row(&self, line: usize, section: &Section, name: &str) -> Result<Option<usize>, ParseError> {
        if let Some(&i) = self.row_index.get(name) {
            return Ok(Some(i));
        }
        if self.objective.as_deref() == Some(name) || self.free_rows.iter().any(|r| r == name) {
            return Ok(None);
        }
        Err(syntax(line, section, format!("unknown row `{name}`")))
    }

    fn is_objective(&self, name: &str) -> bool {
        self.objective.as_deref() == Some(name)
    }

    fn rows_line(&mut self, line: usize, tok: &[&str]) -> Result<(), ParseError> {
        let s = Section::Rows;
        let [kind, name] = tok else {
            return Err(syntax(line, &s, "expected `<type> <name>`"));
        };
        let kind = match kind.to_ascii_uppercase().as_str() {
            "N" => {
                if self.objective.is_none() {
                    self.objective = Some(name.to_string());
                } else {
                    self.free_rows.push(name.to_string());
                }
                return Ok(());
            }
            "L" => RowKind::L,
            "G" => RowKind::G,
            "E" => RowKind::E,
            other => return Err(syntax(line, &s, format!("unknown row type `{other}`"))),
        };
        if self.row_index.contains_key(*name) {
            return Err(syntax(line, &s, format!("duplicate row `{name}`")));
        }
        self.row_index.insert(name.to_string(), self.rows.len());
        self.rows.push((name.to_string(), kind));
        self.rhs.push(0.0);
        self.ranges.push(None);
        Ok(())
    }

    fn columns_line(&mut self, line: usize, tok: &[&str]) -> Result<(), ParseError> {
        let s = Section::Columns;
        if tok.iter().any(|t| t.contains("MARKER")) {
            let what = tok.iter().find(|t| t.contains("INT")).unwrap_or(&"MARKER");
            return Err(ParseError::UnsupportedSection {
                line,
                what: what.trim_matches('\'').to_string(),
            });
        }
        if tok.len() != 3 && tok.len() != 5 {
            return Err(syntax(line, &s, "expected `<column> <row> <value> [<row> <value>]`"));
        }
        let col = match self.col_index.get(tok[0]) {
            Some(&j) => j,
            None => {
                self.col_index.insert(tok[0].to_string(), self.cols.len());
                self.cols.push(tok[0].to_string());
                self.cost.push(0.0);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.cols.len() - 1
            }
        };
        for pair in tok[1..].chunks(2) {
            let v = number(line, &s, pair[1])?;
            if self.is_objective(pair[0]) {
                self.cost[col] += v;
            } else if let Some(i) = self.row(line, &s, pair[0])? {
                self.entries.push((i, col, v));
            }
        }
        Ok(())
    }

    fn rhs_line(&mut self, line: usize, tok: &[&str], section: Section) -> Result<(), ParseError> {
        // the set name is optional when the line has an even token count
        let pairs = if tok.len() % 2 == 1 { &tok[1..] } else { tok };
        if pairs.is_empty() {
            return Err(syntax(line, &section, "expected `[<set>] <row> <value> ...`"));
        }
        for pair in pairs.chunks(2) {
            let v = bound(line, &section, pair[1])?;
            let objective = self.is_objective(pair[0]);
            match (self.row(line, &section, pair[0])?, &section) {
                (Some(i), Section::Rhs) => self.rhs[i] = v,
                (Some(i), _) => self.ranges[i] = Some(v),
                (None, Section::Rhs) if objective => self.offset = -v,
                (None, _) => {}
            }
        }
        Ok(())
    }

    fn bounds_line(&mut self, line: usize, tok: &[&str]) -> Result<(), ParseError> {
        let s = Section::Bounds;
        if tok.is_empty() {
            return Err(syntax(line, &s, "empty bound"));
        }
        let kind = tok[0].to_ascii_uppercase();
        let needs_value = matches!(kind.as_str(), "UP" | "LO" | "FX");
        let flag_only = matches!(kind.as_str(), "FR" | "MI" | "PL");
        if matches!(kind.as_str(), "BV" | "LI" | "UI" | "SC") {
            return Err(ParseError::UnsupportedSection { line, what: kind });
        }
        if !needs_value && !flag_only {
            return Err(syntax(line, &s, format!("unknown bound type `{kind}`")));
        }
        // with a value: `<type> [<set>] <col> <value>`; without: `<type> [<set>] <col>`
        let (col, value) = match (needs_value, tok.len()) {
            (true, 4) => (tok[2], Some(tok[3])),
            (true, 3) => (tok[1], Some(tok[2])),
            (false, 3) => (tok[2], None),
            (false, 2) => (tok[1], None),
            _ => return Err(syntax(line, &s, "wrong number of fields in bound")),
        };
        let j = self.column(line, &s, col)?;
        let value = value.map(|t| bound(line, &s, t)).transpose()?;
        match (kind.as_str(), value) {
            ("UP", Some(v)) => {
                // MPS convention: a negative upper bound on a default lower
                // bound frees the lower side
                if v < 0.0 && self.lower[j] == 0.0 {
                    self.lower[j] = f64::NEG_INFINITY;
                }
                self.upper[j] = v;
            }
            ("LO", Some(v)) => self.lower[j] = v,
            ("FX", Some(v)) => {
                self.lower[j] = v;
                self.upper[j] = v;
            }
            ("FR", _) => {
                self.lower[j] = f64::NEG_INFINITY;
                self.upper[j] = f64::INFINITY;
            }
            ("MI", _) => self.lower[j] = f64::NEG_INFINITY,
            ("PL", _) => self.upper[j] = f64::INFINITY,
            _ => unreachable!("bound kinds filtered above"),
        }
        Ok(())
    }

    fn quad_line(&mut self, line: usize, tok: &[&str], full: bool) -> Result<(), ParseError> {
        let s = Section::QuadObj;
        let [a, b, v] = tok else {
            return Err(syntax(line, &s, "expected `<column> <column> <value>`"));
        };
        let i = self.column(line, &s, a)?;
        let j = self.column(line, &s, b)?;
        let v = number(line, &s, v)?;
        if full && i < j {
            return Ok(());
        }
        self.quad.push((i, j, v));
        Ok(())
    }

    fn finish(self) -> Result<QpsDocument, ParseError> {
        let n = self.cols.len();
        let m = self.rows.len();
        let a = CsrMatrix::from_triplets(m, n, &self.entries)?;
        let (mut lc, mut uc) = (vec![0.0; m], vec![0.0; m]);
        for (i, (_, kind)) in self.rows.iter().enumerate() {
            let b = self.rhs[i];
            let (lo, hi) = match (kind, self.ranges[i]) {
                (RowKind::L, None) => (f64::NEG_INFINITY, b),
                (RowKind::G, None) => (b, f64::INFINITY),
                (RowKind::E, None) => (b, b),
                (RowKind::L, Some(r)) => (b - r.abs(), b),
                (RowKind::G, Some(r)) => (b, b + r.abs()),
                (RowKind::E, Some(r)) if r >= 0.0 => (b, b + r),
                (RowKind::E, Some(r)) => (b + r, b),
            };
            lc[i] = lo;
            uc[i] = hi;
        }
        let sym = SymmetricMatrix::from_triplets(n, &self.quad)?;
        let quad = if sym.is_diagonal() {
            QuadOperator::Diagonal(sym.diagonal())
        } else {
            QuadOperator::Sparse(sym)
        };
        let mut problem = QpProblem::new(
            quad,
            self.cost,
            a,
            Bounds::new(self.lower, self.upper)?,
            Bounds::new(lc, uc)?,
        )?;
        problem.objective_offset = self.offset;
        Ok(QpsDocument {
            name: self.name,
            problem,
            row_names: self.rows.into_iter().map(|(name, _)| name).collect(),
            col_names: self.cols,
        })
    }
}

/// Parses a QPS document, keeping row and column names.
pub fn parse_qps_document(text: &str) -> Result<QpsDocument, ParseError> {
    let mut parser = Parser::new();
    let mut section: Option<Section> = None;
    let mut quad_full = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with([' ', '\t']) {
            let head = tok[0].to_ascii_uppercase();
            section = match head.as_str() {
                "NAME" => {
                    parser.name = tok.get(1..).map(|t| t.join(" ")).unwrap_or_default();
                    Some(Section::Name)
                }
                "OBJSENSE" => {
                    if let Some(sense) = tok.get(1) {
                        objective_sense(line, sense)?;
                    }
                    Some(Section::ObjSense)
                }
                "ROWS" => Some(Section::Rows),
                "COLUMNS" => Some(Section::Columns),
                "RHS" => Some(Section::Rhs),
                "RANGES" => Some(Section::Ranges),
                "BOUNDS" => Some(Section::Bounds),
                "QUADOBJ" | "QSECTION" => {
                    quad_full = false;
                    Some(Section::QuadObj)
                }
                "QMATRIX" => {
                    quad_full = true;
                    Some(Section::QuadObj)
                }
                "ENDATA" => return parser.finish(),
                _ => return Err(ParseError::UnsupportedSection { line, what: tok[0].to_string() }),
            };
            continue;
        }
        match &section {
            None | Some(Section::Name) => {
                return Err(ParseError::Syntax {
                    line,
                    section: "header".into(),
                    message: "data line before any section".into(),
                })
            }
            Some(Section::ObjSense) => objective_sense(line, tok[0])?,
            Some(Section::Rows) => parser.rows_line(line, &tok)?,
            Some(Section::Columns) => parser.columns_line(line, &tok)?,
            Some(Section::Rhs) => parser.rhs_line(line, &tok, Section::Rhs)?,
            Some(Section::Ranges) => parser.rhs_line(line, &tok, Section::Ranges)?,
            Some(Section::Bounds) => parser.bounds_line(line, &tok)?,
            Some(Section::QuadObj) => parser.quad_line(line, &tok, quad_full)?,
        }
    }
    Err(ParseError::Truncated)
}

fn objective_sense(line: usize, sense: &str) -> Result<(), ParseError> {
    match sense.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" => Ok(()),
        other => Err(ParseError::UnsupportedSection {
            line,
            what: format!("OBJSENSE {other}"),
        }),
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

/// Writes `p` in free QPS layout with generated names (`R<i>`, `C<j>`).
pub fn write_qps(p: &QpProblem<f64>, name: &str) -> String {
    let (n, m) = (p.num_vars(), p.num_rows());
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", if name.is_empty() { "problem" } else { name });
    out.push_str("ROWS\n N obj\n");
    let (lc, uc) = (p.con_bounds.lower(), p.con_bounds.upper());
    // a row with no finite side is written as `L` with an infinite right-hand side
    let kinds: Vec<&str> = (0..m)
        .map(|i| match (lc[i].is_finite(), uc[i].is_finite()) {
            (true, true) if lc[i] == uc[i] => "E",
            (true, _) => "G",
            (false, _) => "L",
        })
        .collect();
    for (i, k) in kinds.iter().enumerate() {
        let _ = writeln!(out, " {k} R{i}");
    }

    out.push_str("COLUMNS\n");
    let at = p.constraint_matrix.transpose();
    for j in 0..n {
        if p.cost[j] != 0.0 {
            let _ = writeln!(out, " C{j} obj {}", fmt_num(p.cost[j]));
        }
        let (idx, vals) = at.row(j);
        for (&i, &v) in idx.iter().zip(vals) {
            let _ = writeln!(out, " C{j} R{i} {}", fmt_num(v));
        }
        if p.cost[j] == 0.0 && idx.is_empty() {
            let _ = writeln!(out, " C{j} obj 0");
        }
    }

    out.push_str("RHS\n");
    if p.objective_offset != 0.0 {
        let _ = writeln!(out, " rhs obj {}", fmt_num(-p.objective_offset));
    }
    for (i, k) in kinds.iter().enumerate() {
        let b = match *k {
            "L" => uc[i],
            _ => lc[i],
        };
        if b != 0.0 {
            let _ = writeln!(out, " rhs R{i} {}", fmt_num(b));
        }
    }

    let ranged: Vec<usize> = (0..m)
        .filter(|&i| kinds[i] == "G" && uc[i].is_finite())
        .collect();
    if !ranged.is_empty() {
        out.push_str("RANGES\n");
        for i in ranged {
            let _ = writeln!(out, " rng R{i} {}", fmt_num(uc[i] - lc[i]));
        }
    }

    out.push_str("BOUNDS\n");
    let (lv, uv) = (p.var_bounds.lower(), p.var_bounds.upper());
    for j in 0..n {
        let (l, u) = (lv[j], uv[j]);
        if l == u {
            let _ = writeln!(out, " FX bnd C{j} {}", fmt_num(l));
            continue;
        }
        match (l.is_finite(), u.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR bnd C{j}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI bnd C{j}");
                let _ = writeln!(out, " UP bnd C{j} {}", fmt_num(u));
            }
            (true, _) => {
                if l != 0.0 {
                    let _ = writeln!(out, " LO bnd C{j} {}", fmt_num(l));
                }
                if u.is_finite() {
                    let _ = writeln!(out, " UP bnd C{j} {}", fmt_num(u));
                }
            }
        }
    }

    let dense_lower = quad_lower_triplets(&p.quad);
    if !dense_lower.is_empty() {
        out.push_str("QUADOBJ\n");
        for (i, j, v) in dense_lower {
            let _ = writeln!(out, " C{j} C{i} {}", fmt_num(v));
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Lower-triangle entries `(i, j, v)` with `i ≥ j`, column-major.
fn quad_lower_triplets(q: &QuadOperator<f64>) -> Vec<(usize, usize, f64)> {
    let mut t: Vec<(usize, usize, f64)> = match q {
        QuadOperator::Diagonal(d) => d
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, i, v))
            .collect(),
        QuadOperator::Sparse(s) => s.upper().triplets().map(|(i, j, v)| (j, i, v)).collect(),
        QuadOperator::SparseLowRank { .. } => {
            // no factored form in QPS; expand through products with unit vectors
            let n = q.dim();
            let mut t = Vec::new();
            let mut e = vec![0.0; n];
            for j in 0..n {
                e[j] = 1.0;
                let col = q.apply(&e).expect("unit vector has the operator dimension");
                e[j] = 0.0;
                for (i, &v) in col.iter().enumerate().skip(j) {
                    if v != 0.0 {
                        t.push((i, j, v));
                    }
                }
            }
            t
        }
    };
    t.sort_by_key(|&(i, j, _)| (j, i));
    t
}
