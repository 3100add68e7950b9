//! Instance-file interpreter behind the `artinflat` binary.
//!
//! A file declares a field, rings, maps and modules, then runs `check`
//! lines in order. Each check writes a block of `key: value` lines ending
//! in `status: ok` or `status: fail`.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use artinflat::invariants::{invariant_report, is_complete_intersection, wiebe_matrix};
use artinflat::lemma::LemmaError;
use artinflat::modules::DEFAULT_ENUMERATION_CAP;
use artinflat::{
    check_flatness_criterion, sweep, AlgebraMorphism, Caps, CompiledAlgebra, Element, FieldConfig, FiniteLocalAlgebra, FiniteModule, GeneratorKind, LemmaInstance, Mat,
    MembershipCertificate, Presentation, PresentationError, Verdict, WtfMode,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown {what} `{name}`")]
    Unknown { line: usize, what: &'static str, name: String },
    #[error("line {line}: `{name}` is already declared")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Certificate { path: String, source: LemmaError },
}

/// Size limits enforced on declarations unless raised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_p: u64,
    pub max_dim: usize,
    pub max_n: usize,
}

impl Limits {
    pub fn standard() -> Self {
        Limits {
            max_p: 97,
            max_dim: 256,
            max_n: 8,
        }
    }

    pub fn raised() -> Self {
        Limits {
            max_p: 1 << 31,
            max_dim: 4096,
            max_n: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub seed: u64,
    pub trials: u64,
    pub mode: ModeArg,
    pub timing: bool,
    pub limits: Limits,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            seed: 0,
            trials: 1000,
            mode: ModeArg::Exhaustive,
            timing: false,
            limits: Limits::standard(),
        }
    }
}

/// Whether every check in a run held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
        }
    }
}

struct ModuleEntry {
    module: FiniteModule,
    ring: String,
    /// maps a coordinate vector of the free cover onto the module
    cover: Option<(usize, Mat)>,
}

/// One word of a `check` line with its 1-based column.
#[derive(Debug, Clone)]
struct Arg {
    text: String,
    column: usize,
}

/// Splits on whitespace, keeping bracketed groups whole.
fn split_args(s: &str, offset: usize, line: usize) -> Result<Vec<Arg>, CliError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(CliError::Syntax {
                        line,
                        column: offset + i + 1,
                        message: format!("unbalanced `{ch}`"),
                    });
                }
            }
            _ => {}
        }
        if ch.is_whitespace() && depth == 0 {
            if !cur.is_empty() {
                out.push(Arg {
                    text: std::mem::take(&mut cur),
                    column: offset + start + 1,
                });
            }
        } else {
            if cur.is_empty() {
                start = i;
            }
            cur.push(ch);
        }
    }
    if depth != 0 {
        return Err(CliError::Syntax {
            line,
            column: offset + s.len() + 1,
            message: "unclosed bracket".into(),
        });
    }
    if !cur.is_empty() {
        out.push(Arg {
            text: cur,
            column: offset + start + 1,
        });
    }
    Ok(out)
}

/// Splits at `sep` outside parentheses, with byte offsets of each piece.
fn split_top(s: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &s[start..]));
    out
}

/// Rows of a `[a, b; c, d]` literal, each entry with its column.
fn bracket_rows(arg: &Arg, line: usize) -> Result<Vec<Vec<(usize, String)>>, CliError> {
    let t = arg.text.trim();
    let inner = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(|| CliError::Syntax {
        line,
        column: arg.column,
        message: format!("expected a bracketed list, found `{t}`"),
    })?;
    let base = arg.column + 1;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(split_top(inner, ';')
        .into_iter()
        .map(|(ro, row)| {
            split_top(row, ',')
                .into_iter()
                .map(|(eo, e)| {
                    let lead = e.len() - e.trim_start().len();
                    (base + ro + eo + lead, e.trim().to_string())
                })
                .collect()
        })
        .collect())
}

fn presentation_error(e: PresentationError, line: usize, offset: usize) -> CliError {
    match e {
        PresentationError::Syntax { column, message, .. } => CliError::Syntax {
            line,
            column: offset + column,
            message,
        },
        PresentationError::UnknownVariable { name, column, .. } => CliError::Syntax {
            line,
            column: offset + column,
            message: format!("unknown variable `{name}`"),
        },
        other => CliError::Invalid {
            line,
            message: other.to_string(),
        },
    }
}

fn format_list(a: &FiniteLocalAlgebra, xs: &[Element]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| a.format_element(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn format_vec(v: &[u64]) -> String {
    let parts: Vec<String> = v.iter().map(u64::to_string).collect();
    format!("({})", parts.join(", "))
}

/// Executes instance files against a growing set of declarations.
pub struct Interpreter {
    opts: Options,
    field: Option<FieldConfig>,
    rings: HashMap<String, CompiledAlgebra>,
    maps: HashMap<String, AlgebraMorphism>,
    modules: HashMap<String, ModuleEntry>,
    status: Status,
}

impl Interpreter {
    pub fn new(opts: Options) -> Self {
        Interpreter {
            opts,
            field: None,
            rings: HashMap::new(),
            maps: HashMap::new(),
            modules: HashMap::new(),
            status: Status::Ok,
        }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Runs every line of `src`; reports go to `out`.
    pub fn run(&mut self, src: &str, out: &mut dyn Write) -> Result<Status, CliError> {
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("");
            if text.trim().is_empty() {
                continue;
            }
            self.statement(text, line, out)?;
        }
        Ok(self.status)
    }

    fn statement(&mut self, text: &str, line: usize, out: &mut dyn Write) -> Result<(), CliError> {
        let lead = text.len() - text.trim_start().len();
        let body = text.trim_start();
        let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest_offset = lead + keyword.len() + 1;
        match keyword {
            "field" => self.declare_field(rest.trim(), line, rest_offset),
            "ring" => self.declare_ring(rest, line, rest_offset),
            "map" => self.declare_map(rest, line, rest_offset),
            "module" => self.declare_module(rest, line, rest_offset),
            "check" => self.check(rest, line, rest_offset, out),
            other => Err(CliError::Syntax {
                line,
                column: lead + 1,
                message: format!("unknown statement `{other}`"),
            }),
        }
    }

    fn claim(&self, name: &str, line: usize, column: usize) -> Result<(), CliError> {
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(CliError::Syntax {
                line,
                column,
                message: format!("invalid name `{name}`"),
            });
        }
        if self.rings.contains_key(name) || self.maps.contains_key(name) || self.modules.contains_key(name) {
            return Err(CliError::Duplicate { line, name: name.into() });
        }
        Ok(())
    }

    fn declare_field(&mut self, p: &str, line: usize, column: usize) -> Result<(), CliError> {
        let value: u64 = p.parse().map_err(|_| CliError::Syntax {
            line,
            column: column + 1,
            message: format!("expected a prime, found `{p}`"),
        })?;
        if value > self.opts.limits.max_p {
            return Err(CliError::Invalid {
                line,
                message: format!("p = {value} exceeds the cap {} (use --unsafe-raise-caps)", self.opts.limits.max_p),
            });
        }
        let f = FieldConfig::new(value).map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
        self.field = Some(f);
        Ok(())
    }

    fn need_field(&self, line: usize) -> Result<FieldConfig, CliError> {
        self.field.ok_or(CliError::Invalid {
            line,
            message: "no `field` declared yet".into(),
        })
    }

    fn ring(&self, name: &str, line: usize) -> Result<&CompiledAlgebra, CliError> {
        self.rings.get(name).ok_or_else(|| CliError::Unknown {
            line,
            what: "ring",
            name: name.into(),
        })
    }

    fn module(&self, name: &str, line: usize) -> Result<&ModuleEntry, CliError> {
        self.modules.get(name).ok_or_else(|| CliError::Unknown {
            line,
            what: "module",
            name: name.into(),
        })
    }

    fn map(&self, name: &str, line: usize) -> Result<&AlgebraMorphism, CliError> {
        self.maps.get(name).ok_or_else(|| CliError::Unknown {
            line,
            what: "map",
            name: name.into(),
        })
    }

    /// `ring <Name> vars <v1,..,vn> : <relations>`
    fn declare_ring(&mut self, rest: &str, line: usize, offset: usize) -> Result<(), CliError> {
        let field = self.need_field(line)?;
        let (head, rels) = rest.split_once(':').ok_or(CliError::Syntax {
            line,
            column: offset + rest.len() + 1,
            message: "expected `:` before the relations".into(),
        })?;
        let rels_offset = offset + head.len() + 1;
        let words: Vec<&str> = head.split_whitespace().collect();
        if words.len() < 2 || words[1] != "vars" {
            return Err(CliError::Syntax {
                line,
                column: offset + 1,
                message: "expected `ring <Name> vars <v1,..,vn> : <relations>`".into(),
            });
        }
        let name = words[0];
        self.claim(name, line, offset + 1)?;
        let var_text = words[2..].join(" ");
        let vars: Vec<String> = var_text.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let pres = Presentation::parse(field.p(), &var_refs, rels).map_err(|e| presentation_error(e, line, rels_offset))?;
        let compiled = pres
            .compile_with_cap(self.opts.limits.max_dim)
            .map_err(|e| presentation_error(e, line, rels_offset))?;
        self.rings.insert(name.to_string(), compiled);
        Ok(())
    }

    fn element(&self, ring: &CompiledAlgebra, text: &str, line: usize, column: usize) -> Result<Element, CliError> {
        ring.parse_element(text).map_err(|e| presentation_error(e, line, column - 1))
    }

    /// `map <f> <A> -> <B> : <v1> -> <expr>, ...`
    fn declare_map(&mut self, rest: &str, line: usize, offset: usize) -> Result<(), CliError> {
        let (head, body) = rest.split_once(':').ok_or(CliError::Syntax {
            line,
            column: offset + rest.len() + 1,
            message: "expected `:` before the generator images".into(),
        })?;
        let words: Vec<&str> = head.split_whitespace().collect();
        if words.len() != 4 || words[2] != "->" {
            return Err(CliError::Syntax {
                line,
                column: offset + 1,
                message: "expected `map <f> <A> -> <B> : <v> -> <expr>, ...`".into(),
            });
        }
        let (name, src_name, tgt_name) = (words[0], words[1], words[3]);
        self.claim(name, line, offset + 1)?;
        let src = self.ring(src_name, line)?;
        let tgt = self.ring(tgt_name, line)?;
        let body_offset = offset + head.len() + 1;
        let mut images: Vec<Option<Element>> = vec![None; src.variables().len()];
        for (po, piece) in split_top(body, ',') {
            if piece.trim().is_empty() {
                continue;
            }
            let col = body_offset + po + 1;
            let (var, expr) = piece.split_once("->").ok_or(CliError::Syntax {
                line,
                column: col,
                message: format!("expected `<v> -> <expr>`, found `{}`", piece.trim()),
            })?;
            let var = var.trim();
            let idx = src.variables().iter().position(|v| v == var).ok_or_else(|| CliError::Syntax {
                line,
                column: col,
                message: format!("`{var}` is not a variable of {src_name}"),
            })?;
            if images[idx].is_some() {
                return Err(CliError::Syntax {
                    line,
                    column: col,
                    message: format!("`{var}` assigned twice"),
                });
            }
            let expr_col = body_offset + po + piece.find("->").unwrap() + 3;
            images[idx] = Some(self.element(tgt, expr, line, expr_col)?);
        }
        let images: Vec<Element> = images
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                e.ok_or_else(|| CliError::Invalid {
                    line,
                    message: format!("no image given for `{}`", src.variables()[i]),
                })
            })
            .collect::<Result<_, _>>()?;
        let phi = src
            .substitution_morphism(Arc::clone(tgt.algebra()), &images)
            .map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
        self.maps.insert(name.to_string(), phi);
        Ok(())
    }

    /// `module <M> over <R> : free <k> | coker [..] | actions [..] [..] ...`
    fn declare_module(&mut self, rest: &str, line: usize, offset: usize) -> Result<(), CliError> {
        let (head, body) = rest.split_once(':').ok_or(CliError::Syntax {
            line,
            column: offset + rest.len() + 1,
            message: "expected `:` before the module description".into(),
        })?;
        let words: Vec<&str> = head.split_whitespace().collect();
        if words.len() != 3 || words[1] != "over" {
            return Err(CliError::Syntax {
                line,
                column: offset + 1,
                message: "expected `module <M> over <R> : ...`".into(),
            });
        }
        let (name, ring_name) = (words[0], words[2]);
        self.claim(name, line, offset + 1)?;
        let ring = self.ring(ring_name, line)?;
        let alg = Arc::clone(ring.algebra());
        let body_offset = offset + head.len() + 1;
        let args = split_args(body, body_offset, line)?;
        let Some(kind) = args.first() else {
            return Err(CliError::Syntax {
                line,
                column: body_offset + 1,
                message: "expected `free`, `coker` or `actions`".into(),
            });
        };
        let invalid = |e: &dyn std::fmt::Display| CliError::Invalid { line, message: e.to_string() };
        let entry = match kind.text.as_str() {
            "free" => {
                let k: usize = args.get(1).and_then(|a| a.text.parse().ok()).ok_or(CliError::Syntax {
                    line,
                    column: kind.column,
                    message: "expected `free <k>`".into(),
                })?;
                let module = FiniteModule::free(Arc::clone(&alg), k);
                let cover = Some((k, Mat::identity(alg.field(), module.dim())));
                ModuleEntry {
                    module,
                    ring: ring_name.into(),
                    cover,
                }
            }
            "coker" => {
                let arg = args.get(1).ok_or(CliError::Syntax {
                    line,
                    column: kind.column,
                    message: "expected `coker [<matrix>]`".into(),
                })?;
                let rows = bracket_rows(arg, line)?;
                let mut matrix = Vec::new();
                for row in rows {
                    matrix.push(row.iter().map(|(c, e)| self.element(ring, e, line, *c)).collect::<Result<Vec<_>, _>>()?);
                }
                let k = matrix.len();
                let (module, proj) = FiniteModule::cokernel(Arc::clone(&alg), &matrix).map_err(|e| invalid(&e))?;
                ModuleEntry {
                    module,
                    ring: ring_name.into(),
                    cover: Some((k, proj)),
                }
            }
            "actions" => {
                let field = alg.field();
                let mut mats = Vec::new();
                for arg in &args[1..] {
                    let rows = bracket_rows(arg, line)?;
                    let mut parsed = Vec::new();
                    for row in rows {
                        let mut r = Vec::new();
                        for (c, e) in row {
                            let v: i64 = e.parse().map_err(|_| CliError::Syntax {
                                line,
                                column: c,
                                message: format!("expected an integer, found `{e}`"),
                            })?;
                            r.push(field.from_i64(v));
                        }
                        parsed.push(r);
                    }
                    let dim = parsed.len();
                    mats.push(Mat::from_rows(field, dim, &parsed).map_err(|e| invalid(&e))?);
                }
                let dim = mats.first().map_or(0, Mat::rows);
                let module = FiniteModule::from_variable_actions(ring, dim, &mats).map_err(|e| invalid(&e))?;
                ModuleEntry {
                    module,
                    ring: ring_name.into(),
                    cover: None,
                }
            }
            other => {
                return Err(CliError::Syntax {
                    line,
                    column: kind.column,
                    message: format!("unknown module form `{other}`"),
                })
            }
        };
        if entry.module.dim() > self.opts.limits.max_dim {
            return Err(CliError::Invalid {
                line,
                message: format!(
                    "module dimension {} exceeds the cap {} (use --unsafe-raise-caps)",
                    entry.module.dim(),
                    self.opts.limits.max_dim
                ),
            });
        }
        self.modules.insert(name.to_string(), entry);
        Ok(())
    }

    /// Module element from `[e_1, .., e_k]` over the free cover, or from
    /// integer coordinates for modules given by actions.
    fn module_element(&self, entry: &ModuleEntry, arg: &Arg, line: usize) -> Result<Vec<u64>, CliError> {
        let rows = bracket_rows(arg, line)?;
        let items: Vec<(usize, String)> = rows.into_iter().flatten().collect();
        let ring = self.ring(&entry.ring, line)?;
        let alg = ring.algebra();
        match &entry.cover {
            Some((k, proj)) => {
                if items.len() != *k {
                    return Err(CliError::Invalid {
                        line,
                        message: format!("module element needs {k} entries, found {}", items.len()),
                    });
                }
                let mut v = Vec::with_capacity(k * alg.dim());
                for (c, e) in &items {
                    v.extend_from_slice(self.element(ring, e, line, *c)?.coords());
                }
                Ok(proj.mul_vec(&v))
            }
            None => {
                if items.len() != entry.module.dim() {
                    return Err(CliError::Invalid {
                        line,
                        message: format!("module element needs {} coordinates, found {}", entry.module.dim(), items.len()),
                    });
                }
                let f = alg.field();
                items
                    .iter()
                    .map(|(c, e)| {
                        e.parse::<i64>().map(|v| f.from_i64(v)).map_err(|_| CliError::Syntax {
                            line,
                            column: *c,
                            message: format!("expected an integer, found `{e}`"),
                        })
                    })
                    .collect()
            }
        }
    }

    fn element_list(&self, ring: &CompiledAlgebra, arg: &Arg, line: usize) -> Result<Vec<Element>, CliError> {
        bracket_rows(arg, line)?
            .into_iter()
            .flatten()
            .map(|(c, e)| self.element(ring, &e, line, c))
            .collect()
    }

    fn check(&mut self, rest: &str, line: usize, offset: usize, out: &mut dyn Write) -> Result<(), CliError> {
        let args = split_args(rest, offset, line)?;
        let Some(cmd) = args.first() else {
            return Err(CliError::Syntax {
                line,
                column: offset,
                message: "expected a check command".into(),
            });
        };
        let start = Instant::now();
        let mut report = String::new();
        let ok = match cmd.text.as_str() {
            "invariants" => self.cmd_invariants(&args, line, &mut report)?,
            "ci" => self.cmd_ci(&args, line, &mut report)?,
            "wiebe" => self.cmd_wiebe(&args, line, &mut report)?,
            "flat" => self.cmd_flat(&args, line, &mut report)?,
            "wtf" => self.cmd_wtf(&args, line, &mut report)?,
            "lemma-cert" => self.cmd_lemma_cert(&args, line, &mut report)?,
            "verify-cert" => {
                let path = positional(&args, 1, 1, line, "verify-cert <file>")?[0].text.clone();
                let valid = verify_certificate_file(Path::new(&path))?;
                report.push_str(&format!("valid: {valid}\n"));
                valid
            }
            "criterion" | "theorem1" => {
                let pos = positional(&args, 2, 2, line, "criterion <map> <module>")?;
                let phi = self.map(&pos[0].text, line)?;
                let entry = self.module(&pos[1].text, line)?;
                let rep = check_flatness_criterion(phi, &entry.module).map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
                report.push_str(&rep.to_string());
                rep.verdict == Verdict::Pass
            }
            "sweep" => {
                let flags = flag_values(&args[1..], line, &["--kind", "--seed", "--count"])?;
                let kind: GeneratorKind = required(&flags, "--kind", line)?
                    .parse()
                    .map_err(|e: artinflat::VerifierError| CliError::Invalid { line, message: e.to_string() })?;
                let seed = match flags.get("--seed") {
                    Some(s) => parse_num(s, line)?,
                    None => self.opts.seed,
                };
                let count = parse_num(required(&flags, "--count", line)?, line)?;
                let rep = sweep(kind, seed, count, &Caps::default());
                report.push_str(&rep.to_string());
                rep.violations == 0 && rep.errors == 0
            }
            other => {
                return Err(CliError::Syntax {
                    line,
                    column: cmd.column,
                    message: format!("unknown check `{other}`"),
                })
            }
        };
        if !ok {
            self.status = Status::Failed;
        }
        let echo: Vec<&str> = args.iter().map(|a| a.text.as_str()).collect();
        let mut block = format!("check: {}\nline: {line}\n{report}", echo.join(" "));
        if self.opts.timing {
            block.push_str(&format!("elapsed_ms: {}\n", start.elapsed().as_millis()));
        }
        block.push_str(if ok { "status: ok\n\n" } else { "status: fail\n\n" });
        out.write_all(block.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
    }

    fn cmd_invariants(&self, args: &[Arg], line: usize, report: &mut String) -> Result<bool, CliError> {
        let pos = positional(args, 1, 1, line, "invariants <ring>")?;
        let ring = self.ring(&pos[0].text, line)?;
        let rep = invariant_report(ring.algebra()).map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
        report.push_str(&format!("ring: {}\n", ring.presentation()));
        report.push_str(&rep.to_string());
        report.push('\n');
        Ok(true)
    }

    fn cmd_ci(&self, args: &[Arg], line: usize, report: &mut String) -> Result<bool, CliError> {
        let pos = positional(args, 1, 1, line, "ci <ring>")?;
        let ring = self.ring(&pos[0].text, line)?;
        let rep = is_complete_intersection(ring.algebra()).map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
        report.push_str(&format!("ci: {}\nmu: {}\nedim: {}\n", rep.is_ci, rep.mu, rep.edim));
        Ok(true)
    }

    fn cmd_wiebe(&self, args: &[Arg], line: usize, report: &mut String) -> Result<bool, CliError> {
        let pos = positional(args, 1, 1, line, "wiebe <ring>")?;
        let ring = self.ring(&pos[0].text, line)?;
        let a = ring.algebra();
        match wiebe_matrix(a, &a.min_generators()).map_err(|e| CliError::Invalid { line, message: e.to_string() })? {
            Some(w) => {
                report.push_str(&format!("wiebe: {}\n", w.entries.len()));
                report.push_str(&format!("u: {}\n", format_list(a, &w.u)));
                for (i, row) in w.entries.iter().enumerate() {
                    report.push_str(&format!("row {}: {}\n", i + 1, format_list(a, row)));
                }
                report.push_str(&format!("det: {}\n", a.format_element(&w.det)));
            }
            None => report.push_str("wiebe: none\n"),
        }
        Ok(true)
    }

    fn cmd_flat(&self, args: &[Arg], line: usize, report: &mut String) -> Result<bool, CliError> {
        let usage = "flat <module> [over <ring|map>]";
        let pos = positional(args, 1, 3, line, usage)?;
        let entry = self.module(&pos[0].text, line)?;
        let verdict = match pos.len() {
            1 => entry.module.is_flat(),
            3 if pos[1].text == "over" => {
                let target = &pos[2].text;
                if *target == entry.ring {
                    entry.module.is_flat()
                } else if let Some(phi) = self.maps.get(target) {
                    let restricted = entry.module.restrict_scalars(phi).map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
                    restricted.is_flat()
                } else if self.rings.contains_key(target) {
                    return Err(CliError::Invalid {
                        line,
                        message: format!("`{}` is a module over {}, not {target}", pos[0].text, entry.ring),
                    });
                } else {
                    return Err(CliError::Unknown {
                        line,
                        what: "ring or map",
                        name: target.clone(),
                    });
                }
            }
            _ => {
                return Err(CliError::Invalid {
                    line,
                    message: format!("usage: {usage}"),
                })
            }
        };
        report.push_str(&format!("flat: {}\n", verdict.is_flat));
        report.push_str(&format!("rank: {}\n", verdict.rank.map_or("-".into(), |r| r.to_string())));
        report.push_str(&format!("generators: {}\n", verdict.generator_count));
        report.push_str(&format!("dim: {}\n", verdict.dim));
        Ok(true)
    }

    fn cmd_wtf(&self, args: &[Arg], line: usize, report: &mut String) -> Result<bool, CliError> {
        let (pos, flags) = split_flags(&args[1..]);
        if pos.len() != 1 {
            return Err(CliError::Invalid {
                line,
                message: "usage: wtf <module> [--mode exhaustive|sampled] [--trials N] [--seed S]".into(),
            });
        }
        let flags = flag_values(&flags, line, &["--mode", "--trials", "--seed"])?;
        let entry = self.module(&pos[0].text, line)?;
        let mode_arg = match flags.get("--mode").map(String::as_str) {
            None => self.opts.mode,
            Some("exhaustive") => ModeArg::Exhaustive,
            Some("sampled") => ModeArg::Sampled,
            Some(other) => {
                return Err(CliError::Invalid {
                    line,
                    message: format!("unknown mode `{other}`"),
                })
            }
        };
        let mode = match mode_arg {
            ModeArg::Exhaustive => WtfMode::Exhaustive {
                cap: DEFAULT_ENUMERATION_CAP,
            },
            ModeArg::Sampled => WtfMode::Sampled {
                trials: flags.get("--trials").map_or(Ok(self.opts.trials), |s| parse_num(s, line))?,
                seed: flags.get("--seed").map_or(Ok(self.opts.seed), |s| parse_num(s, line))?,
            },
        };
        let v = entry
            .module
            .is_weakly_torsion_free(mode)
            .map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
        let alg = entry.module.ring();
        report.push_str(&format!(
            "mode: {}\n",
            match mode {
                WtfMode::Exhaustive { .. } => "exhaustive".to_string(),
                WtfMode::Sampled { trials, seed } => format!("sampled trials={trials} seed={seed}"),
            }
        ));
        report.push_str(&format!("weakly_torsion_free: {}\n", v.holds));
        report.push_str(&format!("multipliers_tried: {}\n", v.multipliers_tried));
        if let Some((lambda, m)) = &v.witness {
            report.push_str(&format!("witness_lambda: {}\n", alg.format_element(lambda)));
            report.push_str(&format!("witness_m: {}\n", format_vec(m)));
        }
        Ok(true)
    }

    fn cmd_lemma_cert(&self, args: &[Arg], line: usize, report: &mut String) -> Result<bool, CliError> {
        let (pos, flags) = split_flags(&args[1..]);
        let usage = "lemma-cert <B> [x-list] [u-list] [W] <module> [m] [--out <file>]";
        if pos.len() != 6 {
            return Err(CliError::Invalid {
                line,
                message: format!("usage: {usage}"),
            });
        }
        let flags = flag_values(&flags, line, &["--out"])?;
        let ring = self.ring(&pos[0].text, line)?;
        let x = self.element_list(ring, &pos[1], line)?;
        let u = self.element_list(ring, &pos[2], line)?;
        let w = bracket_rows(&pos[3], line)?
            .into_iter()
            .map(|row| row.into_iter().map(|(c, e)| self.element(ring, &e, line, c)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let entry = self.module(&pos[4].text, line)?;
        if entry.ring != pos[0].text {
            return Err(CliError::Invalid {
                line,
                message: format!("`{}` is a module over {}, not {}", pos[4].text, entry.ring, pos[0].text),
            });
        }
        if x.len() > self.opts.limits.max_n {
            return Err(CliError::Invalid {
                line,
                message: format!("n = {} exceeds the cap {} (use --unsafe-raise-caps)", x.len(), self.opts.limits.max_n),
            });
        }
        let m = self.module_element(entry, &pos[5], line)?;
        let inst = LemmaInstance::new(entry.module.clone(), x, u, w).map_err(|e| CliError::Invalid { line, message: e.to_string() })?;
        report.push_str(&format!("n: {}\n", inst.n()));
        match inst.membership_certificate(&m) {
            Ok(cert) => {
                let verified = cert.verify();
                let alg = entry.module.ring();
                for (i, b) in cert.b.iter().enumerate() {
                    report.push_str(&format!("b{}: {}\n", i + 1, format_vec(b)));
                }
                report.push_str(&format!("u: {}\n", format_list(alg, &cert.u)));
                report.push_str(&format!("verified: {verified}\n"));
                match flags.get("--out") {
                    Some(path) => {
                        fs::write(path, cert.to_text()).map_err(|source| CliError::Io { path: path.clone(), source })?;
                        report.push_str(&format!("certificate: {path}\n"));
                    }
                    None => {
                        report.push_str("certificate:\n");
                        report.push_str(&cert.to_text());
                    }
                }
                Ok(verified)
            }
            Err(e @ (LemmaError::PreconditionFailed | LemmaError::RelationCoefficientOutsideIdeal { .. })) => {
                report.push_str(&format!("certificate: none\nreason: {e}\n"));
                Ok(false)
            }
            Err(e) => Err(CliError::Invalid { line, message: e.to_string() }),
        }
    }
}

fn positional<'a>(args: &'a [Arg], min: usize, max: usize, line: usize, usage: &str) -> Result<&'a [Arg], CliError> {
    let rest = &args[1..];
    if rest.len() < min || rest.len() > max {
        return Err(CliError::Invalid {
            line,
            message: format!("usage: {usage}"),
        });
    }
    Ok(rest)
}

/// Separates `--flag value` pairs from positional words.
fn split_flags(args: &[Arg]) -> (Vec<Arg>, Vec<Arg>) {
    let mut pos = Vec::new();
    let mut flags = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a.text.starts_with("--") {
            flags.push(a.clone());
            if let Some(v) = it.next() {
                flags.push(v.clone());
            }
        } else {
            pos.push(a.clone());
        }
    }
    (pos, flags)
}

fn flag_values(args: &[Arg], line: usize, allowed: &[&str]) -> Result<HashMap<String, String>, CliError> {
    let mut out = HashMap::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if !allowed.contains(&a.text.as_str()) {
            return Err(CliError::Syntax {
                line,
                column: a.column,
                message: format!("unexpected `{}`", a.text),
            });
        }
        let v = it.next().ok_or(CliError::Syntax {
            line,
            column: a.column,
            message: format!("`{}` needs a value", a.text),
        })?;
        out.insert(a.text.clone(), v.text.clone());
    }
    Ok(out)
}

fn required<'a>(flags: &'a HashMap<String, String>, key: &str, line: usize) -> Result<&'a str, CliError> {
    flags.get(key).map(String::as_str).ok_or(CliError::Invalid {
        line,
        message: format!("missing `{key}`"),
    })
}

fn parse_num(s: &str, line: usize) -> Result<u64, CliError> {
    s.parse().map_err(|_| CliError::Invalid {
        line,
        message: format!("expected a nonnegative integer, found `{s}`"),
    })
}

/// Runs the instance file at `path`.
pub fn run_file(path: &Path, opts: Options, out: &mut dyn Write) -> Result<Status, CliError> {
    let src = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Interpreter::new(opts).run(&src, out)
}

pub fn verify_certificate_file(path: &Path) -> Result<bool, CliError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
    let cert = MembershipCertificate::from_text(&text).map_err(|source| CliError::Certificate { path: shown, source })?;
    Ok(cert.verify())
}
