//! Fixed CSV formatting. Floats are written like C's `%.12e`, with a signed
//! exponent of at least two digits, so files compare byte for byte.

/// `%.12e`: `-1.234567890123e-05`, `nan`, `inf`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

pub enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => sci(*v),
            Cell::Text(v) => v.clone(),
        }
    }
}

/// A CSV document with a one-line header. `provenance` appends the config
/// hash as a trailing `config_hash` column.
pub struct Table {
    header: Vec<String>,
    rows: Vec<String>,
    hash: Option<String>,
}

impl Table {
    pub fn new(header: &[&str], hash: Option<&str>) -> Self {
        let mut header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        if hash.is_some() {
            header.push("config_hash".into());
        }
        Table {
            header,
            rows: Vec::new(),
            hash: hash.map(str::to_string),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        let mut fields: Vec<String> = cells.iter().map(Cell::render).collect();
        if let Some(h) = &self.hash {
            fields.push(h.clone());
        }
        assert_eq!(fields.len(), self.header.len(), "row width does not match header");
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}
