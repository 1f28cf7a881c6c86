//! From a resolved scenario file to bundles, connections and solver inputs.

use super::file::{Ex, LocalitySection, ScenarioFile, SpaceSection};
use crate::bundle::{Cocycle, Connection, EquivariantBundle, FlowCocycle, Section};
use crate::dsl::{Env, Expr};
use crate::error::{Error, Result};
use crate::geometry::{
    GroupAction, GroupElement, LieElement, OneForm, ParameterSpace, Path, ScalarField, Topology, VectorField, Word,
};
use crate::locality::{
    default_density_ansatz, default_oneform_ansatz, verdict_local, FieldGenerator, FieldGeneratorSpec, FieldLie,
    FieldLieSpec, FieldModel, LatticeBase, LocalDensity, LocalOneForm,
};
use crate::probes::ProbeSet;
use crate::solvers::{verdict, FormAnsatz, ScalarAnsatz, SolverConfig, VerdictInputs, VerdictReport};

/// Probe box of a euclidean space without explicit bounds.
pub const DEFAULT_HALF_WIDTH: f64 = 2.0;

/// The field-space side of a scenario with a `[locality]` section.
#[derive(Debug, Clone)]
pub struct LocalSetup {
    pub model: FieldModel,
}

/// Everything a command needs from one scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub file: ScenarioFile,
    pub bundle: EquivariantBundle,
    pub connection: Connection,
    pub sections: Vec<Section>,
    pub candidates: Vec<(String, OneForm)>,
    pub config: SolverConfig,
    pub local: Option<LocalSetup>,
}

fn exprs(v: &[Ex]) -> Vec<Expr> {
    v.iter().map(|e| e.expr().clone()).collect()
}

fn point_map(e: Vec<Expr>) -> impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static {
    move |p| e.iter().map(|c| c.eval(&Env::coords(p))).collect()
}

fn timed(e: &Expr, t: f64, p: &[f64]) -> f64 {
    e.eval(&Env {
        coords: p,
        time: t,
        ..Default::default()
    })
}

fn finite(v: f64, p: &[f64], what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            point: p.to_vec(),
            message: format!("{what} is {v}"),
        })
    }
}

fn space_of(s: &SpaceSection) -> Result<ParameterSpace> {
    let d = s.dimension;
    let pairs = |b: &Option<Vec<[f64; 2]>>| -> Option<Vec<(f64, f64)>> {
        b.as_ref().map(|v| v.iter().map(|[lo, hi]| (*lo, *hi)).collect())
    };
    let topology = match s.topology.get_ref().as_str() {
        "euclidean" => Topology::Euclidean {
            probe_bounds: pairs(&s.bounds).unwrap_or_else(|| vec![(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH); d]),
        },
        "box" => Topology::Box {
            bounds: pairs(&s.bounds).ok_or_else(|| Error::InvalidInput("a box space needs `bounds`".into()))?,
        },
        _ => Topology::Torus {
            periods: s
                .periods
                .clone()
                .ok_or_else(|| Error::InvalidInput("a torus space needs `periods`".into()))?,
        },
    };
    ParameterSpace::new(d, topology, s.fd_step.unwrap_or(crate::geometry::DEFAULT_FD_STEP))
}

fn solver_config(file: &ScenarioFile) -> SolverConfig {
    let s = &file.solver;
    SolverConfig {
        seed: s.seed,
        probes: s.probes,
        holdout: s.holdout,
        tol_fit: s.tol_fit,
        tol_holdout: s.tol_holdout,
        max_word_len: s.max_word_len,
        quad_samples: s.quad_samples,
        max_integer: s.max_integer,
    }
}

fn density(e: &Ex) -> LocalDensity {
    LocalDensity::new(e.expr().clone())
}

fn field_model(loc: &LocalitySection) -> Result<FieldModel> {
    let lattice = LatticeBase::new(loc.sites, loc.length)?;
    let generators = loc
        .generators
        .iter()
        .map(|g| {
            let generator = match g.kind.get_ref().as_str() {
                "fiber_affine" => FieldGenerator::FiberAffine {
                    scale: g.scale.unwrap_or(1.0),
                    chi: g.chi.as_ref().map_or_else(|| Expr::num(0.0), |c| c.expr().clone()),
                },
                _ => FieldGenerator::Shift {
                    sites: g.shift.unwrap_or(0),
                },
            };
            FieldGeneratorSpec {
                label: g.label.clone(),
                generator,
                identity_component: g.identity_component,
                cocycle: density(&g.cocycle),
            }
        })
        .collect::<Vec<_>>();
    let labels: Vec<String> = loc.generators.iter().map(|g| g.label.clone()).collect();
    let relations = loc
        .relations
        .iter()
        .map(|r| Word::parse(r.get_ref(), &labels))
        .collect::<Result<Vec<_>>>()?;
    let lie = loc
        .lie
        .iter()
        .map(|x| FieldLieSpec {
            label: x.label.clone(),
            lie: match x.kind.get_ref().as_str() {
                "fiber_translation" => FieldLie::FiberTranslation {
                    chi: x.chi.as_ref().unwrap().expr().clone(),
                },
                _ => FieldLie::Shift,
            },
            potential: density(&x.potential),
        })
        .collect();
    let rho = match &loc.rho {
        Some(c) => LocalOneForm::new(lattice, c.iter().map(density).collect()),
        None => LocalOneForm::zero(lattice),
    };
    let (density_ansatz, default_density) = match &loc.density_ansatz {
        Some(a) => (a.iter().map(density).collect(), false),
        None => (default_density_ansatz(loc.jet_order, loc.density_degree), true),
    };
    let (oneform_ansatz, default_oneform) = match &loc.oneform_ansatz {
        Some(a) => (
            a.iter()
                .map(|f| LocalOneForm::new(lattice, f.iter().map(density).collect()))
                .collect(),
            false,
        ),
        None => (default_oneform_ansatz(lattice, loc.jet_order), true),
    };
    Ok(FieldModel {
        lattice,
        jet_order: loc.jet_order,
        generators,
        relations,
        lie,
        rho,
        density_ansatz,
        oneform_ansatz,
        default_density_ansatz: default_density,
        default_oneform_ansatz: default_oneform,
    })
}

fn generic_parts(file: &ScenarioFile) -> Result<(ParameterSpace, GroupAction, Cocycle, Connection)> {
    let space = space_of(file.space.as_ref().unwrap())?;
    let group = file.group.as_ref().unwrap();
    let generators: Vec<GroupElement> = group
        .generators
        .get_ref()
        .iter()
        .map(|g| GroupElement::new(&g.label, point_map(exprs(&g.map)), point_map(exprs(&g.inverse)), g.identity_component))
        .collect();
    let labels: Vec<String> = generators.iter().map(|g| g.label.clone()).collect();
    let relations = group
        .relations
        .iter()
        .map(|r| Word::parse(r.get_ref(), &labels))
        .collect::<Result<Vec<_>>>()?;
    let dim = space.dimension();
    let mut lie = Vec::new();
    let mut flows = Vec::new();
    for x in &file.lie {
        let field = VectorField::from_exprs(exprs(&x.field));
        lie.push(match &x.flow {
            Some(f) => {
                let f = exprs(f);
                LieElement::with_flow(&x.label, field, move |t, p| {
                    f.iter().map(|c| finite(timed(c, t, p), p, "flow")).collect()
                })
            }
            None => LieElement::from_field(&x.label, field),
        });
        let c = x.cocycle.expr().clone();
        flows.push(FlowCocycle::new(move |t, p| finite(timed(&c, t, p), p, "flow cocycle")));
    }
    let cocycle = Cocycle {
        generators: labels
            .iter()
            .map(|l| ScalarField::from_expr(file.cocycle[l].expr().clone(), dim))
            .collect(),
        lie: flows,
    };
    let action = GroupAction {
        generators,
        relations,
        lie,
    };
    let conn = Connection::new(OneForm::from_exprs(exprs(&file.connection.as_ref().unwrap().rho)));
    Ok((space, action, cocycle, conn))
}

impl Model {
    /// Builds and validates the bundle (inverses, relations, flows, cocycle law).
    pub fn build(file: &ScenarioFile) -> Result<Model> {
        Model::assemble(file, true)
    }

    /// Builds without the cocycle checks, so corrupted data can be inspected.
    pub fn build_unchecked(file: &ScenarioFile) -> Result<Model> {
        Model::assemble(file, false)
    }

    pub fn load(text: &str) -> Result<Model> {
        Model::build(&ScenarioFile::parse(text)?)
    }

    fn assemble(file: &ScenarioFile, checked: bool) -> Result<Model> {
        let config = solver_config(file);
        if let Some(loc) = &file.locality {
            let model = field_model(loc)?;
            let bundle = if checked { model.bundle()? } else { model.bundle_unchecked()? };
            return Ok(Model {
                file: file.clone(),
                connection: model.connection(),
                bundle,
                sections: vec![],
                candidates: vec![],
                config,
                local: Some(LocalSetup { model }),
            });
        }
        let (space, action, cocycle, connection) = generic_parts(file)?;
        let bundle = if checked {
            EquivariantBundle::new(space, action, cocycle)?
        } else {
            EquivariantBundle::new_unchecked(space, action, cocycle)?
        };
        let dim = bundle.dimension();
        let sections = file
            .sections
            .iter()
            .map(|s| Section::new(&s.label, ScalarField::from_expr(s.lambda.expr().clone(), dim)))
            .collect();
        let candidates = file
            .candidates
            .iter()
            .map(|c| (c.label.clone(), OneForm::from_exprs(exprs(&c.form))))
            .collect();
        Ok(Model {
            file: file.clone(),
            bundle,
            connection,
            sections,
            candidates,
            config,
            local: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    /// Fit and held-out probes: Halton points, or smooth random fields on a lattice.
    pub fn probes(&self, config: &SolverConfig) -> ProbeSet {
        match &self.local {
            Some(l) => l.model.probe_set(config.probes, config.holdout, config.seed),
            None => ProbeSet::new(&self.bundle.space, config.probes, config.holdout, config.seed),
        }
    }

    /// `reference` or a named section from the file.
    pub fn section(&self, label: Option<&str>) -> Result<Section> {
        match label {
            None | Some("reference") => Ok(Section::reference()),
            Some(l) => self
                .sections
                .iter()
                .find(|s| s.label == l)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("unknown section `{l}`"))),
        }
    }

    pub fn parse_word(&self, src: &str) -> Result<Word> {
        self.bundle.action.parse_word(src)
    }

    /// A named path, or `unit`: the straight path from the base point to its image.
    pub fn path(&self, label: &str, word: &Word) -> Result<Path> {
        if label == "unit" {
            let base = self.bundle.space.center();
            let end = self.bundle.action.apply(word, &base);
            return Ok(Path::straight(&base, &end));
        }
        let entry = self
            .file
            .paths
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown path `{label}` (known: unit{})", self.path_list())))?;
        Path::polyline(entry.nodes.clone())
    }

    fn path_list(&self) -> String {
        self.file.paths.iter().map(|p| format!(", {}", p.label)).collect()
    }

    pub fn scalar_ansatz(&self) -> ScalarAnsatz {
        let dim = self.bundle.dimension();
        match &self.file.solver.scalar_ansatz {
            Some(a) => ScalarAnsatz::from_exprs(dim, &exprs(a)),
            None => ScalarAnsatz::library(&self.bundle.space, self.file.solver.scalar_degree, true),
        }
    }

    pub fn form_ansatz(&self) -> FormAnsatz {
        match &self.file.solver.oneform_ansatz {
            Some(a) => FormAnsatz::from_exprs(&a.iter().map(|f| exprs(f)).collect::<Vec<_>>()),
            None => FormAnsatz::library(&self.bundle.space, self.file.solver.oneform_degree),
        }
    }

    /// The obstruction pipeline on the generic bundle.
    pub fn verdict(&self, config: &SolverConfig) -> Result<VerdictReport> {
        let probes = self.probes(config);
        let (sa, fa) = (self.scalar_ansatz(), self.form_ansatz());
        verdict(
            &self.bundle,
            &self.connection,
            &VerdictInputs {
                scalar_ansatz: &sa,
                form_ansatz: &fa,
                candidates: &self.candidates,
                probes: &probes,
                config,
            },
        )
    }

    /// The locality pipeline; needs a `[locality]` section.
    pub fn verdict_local(&self, config: &SolverConfig) -> Result<VerdictReport> {
        let local = self.local.as_ref().ok_or_else(|| {
            Error::InvalidInput("`verdict --local` needs a scenario with a [locality] section".into())
        })?;
        let probes = self.probes(config);
        verdict_local(&local.model, &self.bundle, &self.connection, &probes, config)
    }
}
