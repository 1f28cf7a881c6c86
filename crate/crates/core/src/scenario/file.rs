//! The TOML layer of scenario files and the expression-resolution pass.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use toml::Spanned;

use crate::dsl::{parse_with, Context, Expr, Var};
use crate::error::{Error, Result, SourcePos};

pub const SCHEMA_VERSION: u32 = 1;

/// An expression string with its source span and, once resolved, its AST.
///
/// Equality compares resolved expressions, so formatting differences
/// between a file and its printed form do not matter.
#[derive(Debug, Clone)]
pub struct Ex {
    pub src: Spanned<String>,
    pub expr: Option<Expr>,
}

impl Ex {
    pub fn new(src: &str) -> Self {
        Ex {
            src: Spanned::new(0..0, src.to_string()),
            expr: None,
        }
    }

    /// The resolved expression; panics if resolution has not run.
    pub fn expr(&self) -> &Expr {
        self.expr.as_ref().expect("expression resolved during parsing")
    }

    pub fn text(&self) -> &str {
        self.src.get_ref()
    }
}

impl PartialEq for Ex {
    fn eq(&self, other: &Self) -> bool {
        match (&self.expr, &other.expr) {
            (Some(a), Some(b)) => a == b,
            _ => self.src.get_ref() == other.src.get_ref(),
        }
    }
}

impl<'de> Deserialize<'de> for Ex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Ex {
            src: Spanned::deserialize(d)?,
            expr: None,
        })
    }
}

impl Serialize for Ex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.expr {
            Some(e) => s.serialize_str(&e.to_string()),
            None => s.serialize_str(self.src.get_ref()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub dimension: usize,
    /// `euclidean`, `box` or `torus`.
    pub topology: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub label: String,
    pub map: Vec<Ex>,
    pub inverse: Vec<Ex>,
    #[serde(default)]
    pub identity_component: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub generators: Spanned<Vec<GeneratorEntry>>,
    /// Words that act trivially, e.g. `g*h*g^-1*h^-1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieSection {
    pub label: String,
    pub field: Vec<Ex>,
    /// Closed-form flow in x1..xd and t; integrated by RK4 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<Vec<Ex>>,
    /// Real lift of α along the flow, in x1..xd and t.
    pub cocycle: Ex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSection {
    pub rho: Vec<Ex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionEntry {
    pub label: String,
    pub lambda: Ex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumptions {
    /// N connected with H¹(N) = 0.
    pub a1: bool,
    /// A local connection form exists.
    pub a2: bool,
    /// H¹_loc of the field space vanishes.
    pub a3: bool,
}

fn d_seed() -> u64 {
    7
}
fn d_probes() -> usize {
    256
}
fn d_tol_fit() -> f64 {
    1e-6
}
fn d_tol_holdout() -> f64 {
    1e-5
}
fn d_word_len() -> usize {
    3
}
fn d_scalar_degree() -> usize {
    4
}
fn d_oneform_degree() -> usize {
    1
}
fn d_quad() -> usize {
    512
}
fn d_max_int() -> i64 {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_probes")]
    pub probes: usize,
    #[serde(default = "d_probes")]
    pub holdout: usize,
    #[serde(default = "d_tol_fit")]
    pub tol_fit: f64,
    #[serde(default = "d_tol_holdout")]
    pub tol_holdout: f64,
    #[serde(default = "d_word_len")]
    pub max_word_len: usize,
    #[serde(default = "d_scalar_degree")]
    pub scalar_degree: usize,
    #[serde(default = "d_oneform_degree")]
    pub oneform_degree: usize,
    #[serde(default = "d_quad")]
    pub quad_samples: usize,
    #[serde(default = "d_max_int")]
    pub max_integer: i64,
    /// Explicit scalar ansatz replacing the polynomial library.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_ansatz: Option<Vec<Ex>>,
    /// Explicit 1-form ansatz, one coefficient list per element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneform_ansatz: Option<Vec<Vec<Ex>>>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            seed: d_seed(),
            probes: d_probes(),
            holdout: d_probes(),
            tol_fit: d_tol_fit(),
            tol_holdout: d_tol_holdout(),
            max_word_len: d_word_len(),
            scalar_degree: d_scalar_degree(),
            oneform_degree: d_oneform_degree(),
            quad_samples: d_quad(),
            max_integer: d_max_int(),
            scalar_ansatz: None,
            oneform_ansatz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    pub label: String,
    pub form: Vec<Ex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    pub label: String,
    pub nodes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGeneratorEntry {
    pub label: String,
    /// `fiber_affine` (s ↦ scale·s + chi(x)) or `shift` (by `shift` sites).
    pub kind: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Ex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<i64>,
    #[serde(default)]
    pub identity_component: bool,
    /// Density in x and jets whose lattice integral is α_g(s).
    pub cocycle: Ex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldLieEntry {
    pub label: String,
    /// `fiber_translation` (field chi(x)) or `shift` (field −Ds).
    pub kind: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Ex>,
    /// Density Λ* with α_{φ_t}(s) = ℑ[Λ*](φ_t s) − ℑ[Λ*](s).
    pub potential: Ex,
}

fn d_jet_order() -> usize {
    2
}
fn d_density_degree() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalitySection {
    pub sites: usize,
    pub length: f64,
    #[serde(default = "d_jet_order")]
    pub jet_order: usize,
    #[serde(default = "d_density_degree")]
    pub density_degree: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<FieldGeneratorEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lie: Vec<FieldLieEntry>,
    /// Variation-jet coefficient densities c_k of ρ; ρ = 0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<Ex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_ansatz: Option<Vec<Ex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneform_ansatz: Option<Vec<Vec<Ex>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub assumptions: Assumptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lie: Vec<LieSection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cocycle: BTreeMap<String, Ex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<SectionEntry>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locality: Option<LocalitySection>,
}

/// Maps byte offsets to 1-based line and column.
pub(crate) struct LineIndex {
    starts: Vec<usize>,
    text: String,
}

impl LineIndex {
    pub(crate) fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex {
            starts,
            text: text.to_string(),
        }
    }

    pub(crate) fn pos(&self, offset: usize) -> SourcePos {
        let line = match self.starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.starts[line];
        let end = offset.min(self.text.len());
        let column = self.text.get(start..end).map(|s| s.chars().count()).unwrap_or(0) + 1;
        SourcePos { line: line + 1, column }
    }

    pub(crate) fn span_pos<T>(&self, s: &Spanned<T>) -> SourcePos {
        if s.span().is_empty() && s.span().start == 0 {
            return SourcePos { line: 1, column: 1 };
        }
        self.pos(s.span().start)
    }
}

pub(crate) fn semantic(pos: SourcePos, message: impl Into<String>) -> Error {
    Error::Semantic {
        pos,
        message: message.into(),
    }
}

struct Resolver<'a> {
    index: &'a LineIndex,
}

impl Resolver<'_> {
    /// Parses one expression; DSL positions are shifted past the opening quote.
    fn expr(&self, ex: &mut Ex, ctx: &Context, what: &str) -> Result<()> {
        let base = self.index.span_pos(&ex.src);
        let shift = |p: SourcePos| -> SourcePos {
            if ex.src.span().is_empty() {
                return p;
            }
            SourcePos {
                line: base.line,
                column: base.column + p.column,
            }
        };
        match parse_with(ex.src.get_ref(), ctx) {
            Ok(e) => {
                ex.expr = Some(e);
                Ok(())
            }
            Err(Error::Syntax { pos, message }) => Err(Error::Syntax {
                pos: shift(pos),
                message: format!("{what}: {message}"),
            }),
            Err(Error::Semantic { pos, message }) => Err(semantic(shift(pos), format!("{what}: {message}"))),
            Err(e) => Err(e),
        }
    }

    fn vector(&self, v: &mut [Ex], len: usize, ctx: &Context, what: &str, fallback: SourcePos) -> Result<()> {
        if v.len() != len {
            let pos = v.first().map(|e| self.index.span_pos(&e.src)).unwrap_or(fallback);
            return Err(semantic(pos, format!("{what}: expected {len} components, found {}", v.len())));
        }
        for e in v.iter_mut() {
            self.expr(e, ctx, what)?;
        }
        Ok(())
    }

    fn list(&self, v: &mut [Ex], ctx: &Context, what: &str) -> Result<()> {
        for e in v.iter_mut() {
            self.expr(e, ctx, what)?;
        }
        Ok(())
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile> {
        let index = LineIndex::new(text);
        let mut file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let pos = e.span().map(|s| index.pos(s.start)).unwrap_or(SourcePos { line: 1, column: 1 });
            Error::Syntax {
                pos,
                message: e.message().trim().to_string(),
            }
        })?;
        file.resolve(&index)?;
        Ok(file)
    }

    pub fn print(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("cannot print scenario: {e}")))
    }

    fn resolve(&mut self, index: &LineIndex) -> Result<()> {
        let top = SourcePos { line: 1, column: 1 };
        if self.schema_version != SCHEMA_VERSION {
            return Err(semantic(
                top,
                format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let r = Resolver { index };
        match (&self.space, &self.locality) {
            (None, None) => return Err(semantic(top, "a scenario needs a [space] or a [locality] section")),
            (Some(_), Some(_)) => {
                return Err(semantic(top, "[space] and [locality] are mutually exclusive"))
            }
            _ => {}
        }
        if let Some(loc) = &mut self.locality {
            return resolve_locality(&r, loc, &self.cocycle, &self.lie, &self.connection);
        }
        let space = self.space.as_ref().unwrap();
        let dim = space.dimension;
        if dim == 0 || dim > 9 {
            return Err(semantic(index.span_pos(&space.topology), "dimension must be between 1 and 9"));
        }
        let topo = space.topology.get_ref().as_str();
        if !matches!(topo, "euclidean" | "box" | "torus") {
            return Err(semantic(
                index.span_pos(&space.topology),
                format!("unknown topology `{topo}` (expected euclidean, box or torus)"),
            ));
        }
        let coords = Context::coords(dim);
        let timed = Context::coords(dim).with_time();
        let group = self
            .group
            .as_mut()
            .ok_or_else(|| semantic(top, "missing [group] section: at least one generator is required"))?;
        let gpos = index.span_pos(&group.generators);
        if group.generators.get_ref().is_empty() {
            return Err(semantic(gpos, "at least one generator is required"));
        }
        let mut labels: Vec<String> = Vec::new();
        for g in group.generators.get_mut().iter_mut() {
            if labels.contains(&g.label) || !valid_label(&g.label) {
                return Err(semantic(gpos, format!("generator label `{}` is duplicated or not an identifier", g.label)));
            }
            labels.push(g.label.clone());
            r.vector(&mut g.map, dim, &coords, &format!("map of `{}`", g.label), gpos)?;
            r.vector(&mut g.inverse, dim, &coords, &format!("inverse of `{}`", g.label), gpos)?;
        }
        for rel in &group.relations {
            crate::geometry::Word::parse(rel.get_ref(), &labels)
                .map_err(|e| semantic(index.span_pos(rel), format!("relation: {e}")))?;
        }
        for (label, ex) in self.cocycle.iter_mut() {
            if !labels.contains(label) {
                return Err(semantic(index.span_pos(&ex.src), format!("cocycle entry for unknown generator `{label}`")));
            }
            r.expr(ex, &coords, &format!("cocycle of `{label}`"))?;
        }
        if let Some(missing) = labels.iter().find(|l| !self.cocycle.contains_key(*l)) {
            return Err(semantic(gpos, format!("no cocycle given for generator `{missing}`")));
        }
        let mut lie_labels: Vec<&str> = Vec::new();
        for x in self.lie.iter_mut() {
            if lie_labels.contains(&x.label.as_str()) {
                return Err(semantic(index.span_pos(&x.cocycle.src), format!("duplicate Lie label `{}`", x.label)));
            }
            lie_labels.push(&x.label);
            let pos = index.span_pos(&x.cocycle.src);
            r.vector(&mut x.field, dim, &coords, &format!("field of `{}`", x.label), pos)?;
            if let Some(f) = &mut x.flow {
                r.vector(f, dim, &timed, &format!("flow of `{}`", x.label), pos)?;
            }
            r.expr(&mut x.cocycle, &timed, &format!("cocycle of `{}`", x.label))?;
        }
        let conn = self
            .connection
            .as_mut()
            .ok_or_else(|| semantic(top, "missing [connection] section"))?;
        r.vector(&mut conn.rho, dim, &coords, "connection rho", top)?;
        for s in self.sections.iter_mut() {
            r.expr(&mut s.lambda, &coords, &format!("section `{}`", s.label))?;
        }
        for c in self.candidates.iter_mut() {
            r.vector(&mut c.form, dim, &coords, &format!("candidate `{}`", c.label), top)?;
        }
        for p in &self.paths {
            if p.label == "unit" {
                return Err(semantic(top, "path label `unit` is reserved"));
            }
            if p.nodes.len() < 2 || p.nodes.iter().any(|n| n.len() != dim) {
                return Err(semantic(top, format!("path `{}` needs at least 2 nodes of dimension {dim}", p.label)));
            }
        }
        resolve_solver(&r, &mut self.solver, dim)
    }
}

fn valid_label(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        && s != "e"
}

fn resolve_solver(r: &Resolver<'_>, s: &mut SolverSection, dim: usize) -> Result<()> {
    let top = SourcePos { line: 1, column: 1 };
    if s.probes == 0 || s.holdout == 0 {
        return Err(semantic(top, "solver.probes and solver.holdout must be positive"));
    }
    if !(s.tol_fit > 0.0 && s.tol_holdout > 0.0) {
        return Err(semantic(top, "solver tolerances must be positive"));
    }
    if s.max_integer < 0 {
        return Err(semantic(top, "solver.max_integer must be non-negative"));
    }
    let coords = Context::coords(dim);
    if let Some(a) = &mut s.scalar_ansatz {
        r.list(a, &coords, "scalar ansatz")?;
    }
    if let Some(a) = &mut s.oneform_ansatz {
        for f in a.iter_mut() {
            r.vector(f, dim, &coords, "1-form ansatz", top)?;
        }
    }
    Ok(())
}

/// Density context: `x`, `u`, `u1`..`u_order`.
fn density_ctx(order: usize) -> Context {
    Context::jets(order)
}

fn resolve_locality(
    r: &Resolver<'_>,
    loc: &mut LocalitySection,
    cocycle: &BTreeMap<String, Ex>,
    lie: &[LieSection],
    connection: &Option<ConnectionSection>,
) -> Result<()> {
    let top = SourcePos { line: 1, column: 1 };
    if !cocycle.is_empty() || !lie.is_empty() || connection.is_some() {
        return Err(semantic(
            top,
            "field-space scenarios declare cocycles, Lie elements and rho inside [locality]",
        ));
    }
    if loc.sites < 8 {
        return Err(semantic(top, "locality.sites must be at least 8"));
    }
    if !(loc.length > 0.0 && loc.length.is_finite()) {
        return Err(semantic(top, "locality.length must be positive"));
    }
    if loc.jet_order > 6 {
        return Err(semantic(top, "locality.jet_order is at most 6"));
    }
    if loc.generators.is_empty() && loc.lie.is_empty() {
        return Err(semantic(top, "at least one generator is required"));
    }
    let ord = loc.jet_order;
    let dens = density_ctx(ord);
    let mut labels: Vec<String> = Vec::new();
    for g in loc.generators.iter_mut() {
        let pos = r.index.span_pos(&g.kind);
        if labels.contains(&g.label) || !valid_label(&g.label) {
            return Err(semantic(pos, format!("generator label `{}` is duplicated or not an identifier", g.label)));
        }
        labels.push(g.label.clone());
        match g.kind.get_ref().as_str() {
            "fiber_affine" => {
                if g.shift.is_some() {
                    return Err(semantic(pos, "`shift` only applies to kind = \"shift\""));
                }
                if let Some(a) = g.scale {
                    if a == 0.0 || !a.is_finite() {
                        return Err(semantic(pos, "fiber scale must be a nonzero number"));
                    }
                }
                if let Some(c) = &mut g.chi {
                    base_only(r, c, "chi")?;
                }
            }
            "shift" => {
                if g.scale.is_some() || g.chi.is_some() {
                    return Err(semantic(pos, "`scale` and `chi` only apply to kind = \"fiber_affine\""));
                }
                if g.shift.is_none() {
                    return Err(semantic(pos, "a shift generator needs `shift`"));
                }
            }
            other => return Err(semantic(pos, format!("unknown generator kind `{other}`"))),
        }
        r.expr(&mut g.cocycle, &dens, &format!("cocycle of `{}`", g.label))?;
    }
    for rel in &loc.relations {
        crate::geometry::Word::parse(rel.get_ref(), &labels)
            .map_err(|e| semantic(r.index.span_pos(rel), format!("relation: {e}")))?;
    }
    for x in loc.lie.iter_mut() {
        let pos = r.index.span_pos(&x.kind);
        match x.kind.get_ref().as_str() {
            "fiber_translation" => match &mut x.chi {
                Some(c) => base_only(r, c, "chi")?,
                None => return Err(semantic(pos, "a fiber translation needs `chi`")),
            },
            "shift" => {
                if x.chi.is_some() {
                    return Err(semantic(pos, "`chi` only applies to fiber translations"));
                }
            }
            other => return Err(semantic(pos, format!("unknown Lie kind `{other}`"))),
        }
        r.expr(&mut x.potential, &dens, &format!("potential of `{}`", x.label))?;
    }
    if let Some(rho) = &mut loc.rho {
        if rho.is_empty() || rho.len() > ord + 1 {
            return Err(semantic(top, format!("locality.rho takes 1 to {} coefficient densities", ord + 1)));
        }
        r.list(rho, &dens, "local rho")?;
    }
    if let Some(a) = &mut loc.density_ansatz {
        r.list(a, &dens, "density ansatz")?;
    }
    if let Some(a) = &mut loc.oneform_ansatz {
        for f in a.iter_mut() {
            if f.is_empty() || f.len() > ord + 1 {
                return Err(semantic(top, format!("1-form densities take 1 to {} coefficients", ord + 1)));
            }
            r.list(f, &dens, "1-form density ansatz")?;
        }
    }
    Ok(())
}

/// Parses an expression that may use the base coordinate `x` only.
fn base_only(r: &Resolver<'_>, ex: &mut Ex, what: &str) -> Result<()> {
    r.expr(ex, &Context::jets(0), what)?;
    if ex.expr().mentions(Var::Jet(0)) {
        return Err(semantic(r.index.span_pos(&ex.src), format!("{what} may depend on `x` only")));
    }
    Ok(())
}
