//! Command-line front end: every analysis as a subcommand with a text or JSON report.

use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use mpfp_core::canonical::{
    block_injectivity_length, canonical_form, cfii_residuals, find_gauge, fundamental_theorem_check, is_injective,
    spectral_radius_of, to_block_injective, to_cfii, GaugeResult, Injectivity, Verdict,
};
use mpfp_core::general::{
    fibonacci_rank, fit_algebra, geometric_rank_fit, is_rfp_mpdo, projector_gibbs_decomposition, vertical_cf,
    RfpMpdoVerdict, ALGEBRA_TOL,
};
use mpfp_core::io::TensorFile;
use mpfp_core::library::{self, Example, NAMES};
use mpfp_core::linalg::{cr, orth, Mat};
use mpfp_core::mixed::{
    build_ts_channels, extract_gsnnch, is_prfp, is_simple, is_zcl_mixed, mutual_info_profile, purify, validate_mpdo,
    GsnnchOptions, Purification, CHANNEL_TOL, MIXED_TOL,
};
use mpfp_core::pure::{
    decorrelation_check, entropy_profile_pure, is_cid, is_rfp_pure, parent_hamiltonian, renormalization_flow, N_CHECK,
    RFP_TOL,
};
use mpfp_core::tensor::open_products;
use mpfp_core::{Error, MpdoTensor, MpvTensor, C};

pub const SCHEMA: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "mpfp", version, about = "Renormalization fixed points of matrix-product states and density operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// System size (meaning depends on the command).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of fitted lengths for the algebra commands.
    #[arg(long, global = true)]
    pub lmax: Option<usize>,
    /// Verdict tolerance where the command exposes one.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Channel parameter of the zcl-no-sal example.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Emit a JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Canonical form: block structure and BNT.
    Canon { input: String },
    /// Canonical form II: fixed points and trace-preserving gauge.
    Cfii { input: String },
    /// Basis of normal tensors.
    Bnt { input: String },
    /// Gauge relating two normal tensors.
    Gauge { a: String, b: String },
    /// Equivalence of two tensors (same states for all N).
    Equiv { a: String, b: String },
    /// Injectivity and block-injectivity length.
    Inject { input: String },
    /// Pure-state RFP test.
    RfpPure { input: String },
    /// Blocking renormalization flow of the transfer matrix.
    Flow { input: String },
    /// Parent Hamiltonian of the block-injective tensor.
    Parent { input: String },
    /// Block entropies of a pure MPV.
    Entropy { input: String },
    /// Hermiticity and positivity of an MPDO.
    Validate { input: String },
    /// Zero correlation length.
    Zcl { input: String },
    /// Local purification of an MPDO.
    Purify { input: String },
    /// Purification RFP test.
    Prfp { input: String },
    /// Mutual information profile.
    MutualInfo { input: String },
    /// Simplicity of an MPDO.
    Simple { input: String },
    /// Gibbs-state structure extraction.
    Gsnnch { input: String },
    /// Fine-graining and coarse-graining channels.
    Channels { input: String },
    /// Vertical canonical form.
    Vcf { input: String },
    /// Boundary-operator algebra.
    Algebra { input: String },
    /// Fusion weights for every label pair.
    Fusion { input: String },
    /// General MPDO RFP test.
    RfpMpdo { input: String },
    /// Projector decomposition of the RFP state.
    Decompose { input: String },
    /// Fibonacci boundary ranks.
    FibRank,
    /// Decorrelation of the three-block ground space.
    Decorrelate { input: String },
    /// Print a built-in example as a tensor file.
    Example { name: String },
}

/// Result of one invocation: exit code and the text written to stdout.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

fn c(z: C) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn load(input: &str, p: Option<f64>) -> Result<(Example, String), Error> {
    let path = Path::new(input);
    if path.is_file() {
        let f = TensorFile::read(path)?;
        let name = f.name.clone().unwrap_or_else(|| input.to_string());
        return Ok((f.to_example(), name));
    }
    let base = path.file_name().and_then(|s| s.to_str()).unwrap_or(input);
    let base = base.strip_suffix(".tensor").unwrap_or(base);
    if NAMES.contains(&base) {
        return Ok((library::example(base, p)?, base.to_string()));
    }
    Err(Error::Other(format!("no such file or built-in example: {input}")))
}

fn need_mpv(e: Example) -> Result<MpvTensor, Error> {
    match e {
        Example::Mpv(a) => Ok(a),
        Example::Mpdo(_) => Err(Error::Precondition("command needs an mpv tensor".into())),
    }
}

fn as_mpdo(e: Example) -> MpdoTensor {
    match e {
        Example::Mpv(a) => MpdoTensor::from_pure(&a),
        Example::Mpdo(m) => m,
    }
}

fn verdict(ok: bool, residual: f64, tol: f64) -> Value {
    json!({ "value": ok, "residual": residual, "tol": tol })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical { .. } | Error::IllConditioned { .. } => 2,
        _ => 1,
    }
}

fn dispatch(cmd: &Command, o: &Opts) -> Result<Value, Error> {
    let load1 = |s: &str| load(s, o.p);
    Ok(match cmd {
        Command::Canon { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let dec = canonical_form(&a)?;
            let blocks: Vec<Value> = dec
                .blocks
                .iter()
                .map(|b| json!({ "bnt": b.bnt_index, "weight": c(b.weight), "bond": b.gauge.nrows() }))
                .collect();
            json!({ "bnt_count": dec.g(), "blocking": dec.blocking, "scale": dec.scale, "blocks": blocks })
        }
        Command::Cfii { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let cf = to_cfii(&a)?;
            let els: Vec<Value> = cf
                .bnt
                .iter()
                .zip(&cf.lambdas)
                .map(|(b, l)| {
                    let (tp, fp) = cfii_residuals(b, l);
                    json!({
                        "bond": b.bond,
                        "lambda": (0..l.nrows()).map(|k| l[(k, k)].re).collect::<Vec<f64>>(),
                        "trace_preserving_residual": tp,
                        "fixed_point_residual": fp,
                    })
                })
                .collect();
            let weights: Vec<Value> = cf.weights.iter().map(|&(j, w)| json!({ "bnt": j, "weight": c(w) })).collect();
            json!({ "bnt": els, "weights": weights, "scale": cf.scale, "blocking": cf.blocking })
        }
        Command::Bnt { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let dec = canonical_form(&a)?;
            let els: Vec<Value> = (0..dec.g())
                .map(|j| {
                    let w = dec.weights_of(j);
                    json!({ "bond": dec.bnt[j].bond, "multiplicity": w.len(), "weights": w.into_iter().map(c).collect::<Vec<_>>() })
                })
                .collect();
            json!({ "bnt": els, "blocking": dec.blocking })
        }
        Command::Gauge { a, b } => {
            let x = need_mpv(load1(a)?.0)?;
            let y = need_mpv(load1(b)?.0)?;
            match find_gauge(&x, &y)? {
                GaugeResult::Gauge(w) => json!({
                    "related": true,
                    "phase": w.phase,
                    "scale": w.scale,
                    "residual": w.residual,
                    "tol": 1e-6,
                }),
                GaugeResult::Distinct { spectral_radius } => {
                    json!({ "related": false, "mixed_transfer_spectral_radius": spectral_radius })
                }
            }
        }
        Command::Equiv { a, b } => {
            let x = need_mpv(load1(a)?.0)?;
            let y = need_mpv(load1(b)?.0)?;
            let r = fundamental_theorem_check(&x, &y)?;
            let v = match r.verdict {
                Verdict::Equal => json!({ "kind": "equal" }),
                Verdict::Proportional { factor } => json!({ "kind": "proportional", "factor": c(factor) }),
                Verdict::Inequivalent => json!({ "kind": "inequivalent" }),
            };
            let matches: Vec<Value> = r
                .matches
                .iter()
                .map(|(j, k, w)| json!({ "a": j, "b": k, "phase": w.phase, "residual": w.residual }))
                .collect();
            json!({ "verdict": v, "bnt_a": r.g_a, "bnt_b": r.g_b, "matches": matches, "weights_match": r.weights_match })
        }
        Command::Inject { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let inj = match is_injective(&a) {
                Injectivity::Injective(l) => json!({ "injective": true, "length": l }),
                Injectivity::NotInjective { rank } => json!({ "injective": false, "span_rank": rank }),
            };
            let dec = canonical_form(&a)?;
            json!({ "injectivity": inj, "block_injectivity_length": block_injectivity_length(&dec)? })
        }
        Command::RfpPure { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let tol = o.tol.unwrap_or(RFP_TOL);
            let v = is_rfp_pure(&a)?;
            json!({ "rfp": verdict(v.residual < tol, v.residual, tol) })
        }
        Command::Flow { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let r = spectral_radius_of(&a);
            let a = a.scaled(cr(1.0 / r.sqrt()));
            let f = renormalization_flow(&a, o.n.unwrap_or(32))?;
            json!({ "steps": f.steps.len(), "converged": f.converged, "residuals": f.residuals })
        }
        Command::Parent { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let (b, l) = to_block_injective(&a)?;
            let ph = parent_hamiltonian(&b, 2)?;
            let ground: Vec<Value> = ph
                .ground
                .iter()
                .map(|g| json!({ "n": g.n, "kernel_dim": g.kernel_dim, "span_dim": g.span_dim }))
                .collect();
            json!({
                "blocking": l,
                "window": ph.l,
                "term_rank": ph.p_perp.trace().re.round(),
                "commuting": verdict(ph.commuting, ph.commutator_norm, RFP_TOL),
                "parent": ph.parent,
                "ground": ground,
            })
        }
        Command::Entropy { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let n = o.n.unwrap_or(N_CHECK);
            let e = entropy_profile_pure(&a, n)?;
            json!({ "n": n, "entropies": e.entropies, "sal": e.sal })
        }
        Command::Validate { input } => {
            let m = as_mpdo(load1(input)?.0);
            let nmax = o.n.unwrap_or(4);
            let ns: Vec<usize> = (1..=nmax).collect();
            let v = validate_mpdo(&m, &ns)?;
            let rows: Vec<Value> = v
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "hermiticity_residual": r.hermiticity_residual,
                        "min_eigenvalue": r.min_eigenvalue,
                        "psd": r.psd,
                    })
                })
                .collect();
            json!({ "hermitian": v.hermitian, "psd": v.psd, "tol": MIXED_TOL, "rows": rows })
        }
        Command::Zcl { input } => match load1(input)?.0 {
            Example::Mpv(a) => {
                let n = o.n.unwrap_or(N_CHECK);
                let tol = o.tol.unwrap_or(RFP_TOL);
                let r = is_cid(&a, n)?;
                json!({ "kind": "mpv", "n": n, "cid": verdict(r.max_deviation < tol, r.max_deviation, tol) })
            }
            Example::Mpdo(m) => {
                let tol = o.tol.unwrap_or(1e-9);
                let z = is_zcl_mixed(&m);
                json!({ "kind": "mpdo", "zcl": verdict(z.residual < tol && z.zcl, z.residual, tol), "lambda": c(z.lambda) })
            }
        },
        Command::Purify { input } => {
            let m = as_mpdo(load1(input)?.0);
            match purify(&m) {
                Purification::Success { tensor, ancilla, form, residual, .. } => json!({
                    "success": true,
                    "ancilla": ancilla,
                    "bond": tensor.bond,
                    "form": format!("{form:?}"),
                    "residual": residual,
                    "tol": 1e-9,
                }),
                Purification::Failure { min_eigenvalue } => json!({ "success": false, "min_eigenvalue": min_eigenvalue }),
            }
        }
        Command::Prfp { input } => {
            let m = as_mpdo(load1(input)?.0);
            let r = is_prfp(&m)?;
            json!({
                "prfp": verdict(r.prfp, r.rfp_residual, RFP_TOL),
                "zcl": r.zcl,
                "warning": r.warning,
            })
        }
        Command::MutualInfo { input } => {
            let m = as_mpdo(load1(input)?.0);
            let n = o.n.unwrap_or(6);
            let p = mutual_info_profile(&m, n)?;
            json!({
                "n": n,
                "entropies": p.entropies,
                "mutual_info": p.mutual_info,
                "bound": p.bound,
                "sal": p.sal,
                "tol": 1e-8,
            })
        }
        Command::Simple { input } => {
            let m = as_mpdo(load1(input)?.0);
            let s = is_simple(&m)?;
            json!({ "simple": s.simple, "nilpotent_bnt": s.nilpotent })
        }
        Command::Gsnnch { input } => {
            let m = as_mpdo(load1(input)?.0);
            let g = extract_gsnnch(&m, &GsnnchOptions { n: o.n.unwrap_or(6), seed: o.seed })?;
            json!({
                "applicable": true,
                "dims": g.split.dims,
                "t": g.t,
                "a": g.a,
                "b": g.b,
                "zcl": g.zcl,
                "primitive": g.primitive,
                "primitivity_power": g.primitivity_power,
                "reassembly": verdict(g.reassembly_residual < 1e-8, g.reassembly_residual, 1e-8),
                "commutator_residual": g.commutator_residual,
                "lambda": g.lambda,
                "warnings": g.warnings,
            })
        }
        Command::Channels { input } => {
            let m = as_mpdo(load1(input)?.0);
            let g = extract_gsnnch(&m, &GsnnchOptions { n: o.n.unwrap_or(6), seed: o.seed })?;
            let ch = build_ts_channels(&m, &g)?;
            let rep = |k: &mpfp_core::mixed::ChannelCheck| {
                json!({
                    "identity": verdict(k.identity_residual < CHANNEL_TOL, k.identity_residual, CHANNEL_TOL),
                    "trace_residual": k.trace_residual,
                    "choi_min": k.choi_min,
                })
            };
            json!({ "applicable": true, "t": rep(&ch.t_check), "s": rep(&ch.s_check) })
        }
        Command::Vcf { input } => {
            let m = as_mpdo(load1(input)?.0);
            let v = vertical_cf(&m)?;
            json!({
                "labels": v.labels(),
                "mu": v.mu,
                "m": v.m,
                "bonds": v.bnt.iter().map(|b| b.bond).collect::<Vec<_>>(),
                "l0": v.l0,
                "reassembly": verdict(v.residual < 1e-9, v.residual, 1e-9),
            })
        }
        Command::Algebra { input } => {
            let m = as_mpdo(load1(input)?.0);
            let v = vertical_cf(&m)?;
            let s = fit_algebra(&v, o.lmax.unwrap_or(5))?;
            let g = s.labels;
            let table: Vec<Value> = s
                .levels
                .iter()
                .map(|f| {
                    let mut rows = Vec::new();
                    for a in 0..g {
                        for b in 0..g {
                            let cs: Vec<f64> = (0..g).map(|k| f.c[(a * g + b) * g + k].re).collect();
                            rows.push(json!({ "alpha": a, "beta": b, "c": cs }));
                        }
                    }
                    json!({ "l": f.l, "closure_residual": f.closure_residual, "coefficients": rows })
                })
                .collect();
            json!({
                "labels": g,
                "levels": table,
                "l_independent": s.l_independent,
                "integer_coefficients": s.integer_coefficients,
                "idempotent": verdict(s.idempotent_ok, s.idempotent_residual, 1e-8),
                "prediction": json!({ "l": s.prediction_level, "residual": s.prediction_residual, "tol": ALGEBRA_TOL }),
                "associativity_residual": s.associativity_residual,
                "fusion_residual": s.fusion_residual,
            })
        }
        Command::Fusion { input } => {
            let m = as_mpdo(load1(input)?.0);
            let v = vertical_cf(&m)?;
            let s = fit_algebra(&v, o.lmax.unwrap_or(5))?;
            let pairs: Vec<Value> = s
                .fusion
                .iter()
                .map(|f| {
                    let blocks: Vec<Value> = f.blocks.iter().map(|b| json!({ "gamma": b.gamma, "chi": c(b.chi) })).collect();
                    json!({ "alpha": f.alpha, "beta": f.beta, "blocks": blocks })
                })
                .collect();
            json!({ "pairs": pairs, "agreement": verdict(s.fusion_residual < ALGEBRA_TOL, s.fusion_residual, ALGEBRA_TOL) })
        }
        Command::RfpMpdo { input } => {
            let m = as_mpdo(load1(input)?.0);
            let r = is_rfp_mpdo(&m);
            let reason = match &r.verdict {
                RfpMpdoVerdict::Rfp => Value::Null,
                RfpMpdoVerdict::NotRfp(w) => json!(w),
            };
            json!({ "rfp": r.is_rfp(), "reason": reason, "zcl": r.zcl })
        }
        Command::Decompose { input } => {
            let m = as_mpdo(load1(input)?.0);
            let p = projector_gibbs_decomposition(&m, o.n.unwrap_or(5), o.seed)?;
            let terms: Vec<Value> = p
                .terms
                .iter()
                .map(|t| json!({ "lambda": t.lambda, "coefficients": t.coefficients.iter().map(|z| c(*z)).collect::<Vec<_>>() }))
                .collect();
            json!({
                "ns": p.ns,
                "terms": terms,
                "hamiltonian_norm": p.hamiltonian_norm,
                "projector_residual": p.projector_residual,
                "reconstruction": verdict(p.reconstruction_residual < 1e-8, p.reconstruction_residual, 1e-8),
            })
        }
        Command::FibRank => {
            let n = o.n.unwrap_or(4);
            let rows: Vec<_> = (1..=n).map(fibonacci_rank).collect();
            let closed: Vec<u64> = rows.iter().map(|r| r.closed_form).collect();
            let fit = geometric_rank_fit(&closed, 50);
            json!({
                "closed_form": closed,
                "brute_force": rows.iter().map(|r| r.brute_force).collect::<Vec<_>>(),
                "geometric_fit": fit.map(|(r, s)| json!({ "r": r, "s": s })),
            })
        }
        Command::Decorrelate { input } => {
            let a = need_mpv(load1(input)?.0)?;
            let (b, l) = to_block_injective(&a)?;
            let prods = open_products(&b, 3);
            let dim = prods.len();
            let k = b.bond;
            let span = Mat::from_fn(dim, k * k, |x, ab| prods[x][(ab / k, ab % k)]);
            let basis = orth(&span, 1e-10);
            let r = decorrelation_check(&basis, (b.d, b.d, b.d))?;
            json!({
                "blocking": l,
                "ground_dim": basis.ncols(),
                "decorrelated": verdict(r.decorrelated, r.witness, RFP_TOL),
                "commuting_projectors": r.commuting_witness.is_some(),
                "commutator": r.commutator,
                "agree": r.agree,
            })
        }
        Command::Example { name } => {
            let e = library::example(name, o.p)?;
            let mut f = TensorFile::from_example(&e);
            f.name = Some(name.clone());
            f.provenance = Some(library::citation(name).to_string());
            json!({ "file": f.serialize() })
        }
    })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Canon { .. } => "canon",
        Command::Cfii { .. } => "cfii",
        Command::Bnt { .. } => "bnt",
        Command::Gauge { .. } => "gauge",
        Command::Equiv { .. } => "equiv",
        Command::Inject { .. } => "inject",
        Command::RfpPure { .. } => "rfp-pure",
        Command::Flow { .. } => "flow",
        Command::Parent { .. } => "parent",
        Command::Entropy { .. } => "entropy",
        Command::Validate { .. } => "validate",
        Command::Zcl { .. } => "zcl",
        Command::Purify { .. } => "purify",
        Command::Prfp { .. } => "prfp",
        Command::MutualInfo { .. } => "mutual-info",
        Command::Simple { .. } => "simple",
        Command::Gsnnch { .. } => "gsnnch",
        Command::Channels { .. } => "channels",
        Command::Vcf { .. } => "vcf",
        Command::Algebra { .. } => "algebra",
        Command::Fusion { .. } => "fusion",
        Command::RfpMpdo { .. } => "rfp-mpdo",
        Command::Decompose { .. } => "decompose",
        Command::FibRank => "fib-rank",
        Command::Decorrelate { .. } => "decorrelate",
        Command::Example { .. } => "example",
    }
}

fn inputs(cmd: &Command) -> Vec<String> {
    match cmd {
        Command::Gauge { a, b } | Command::Equiv { a, b } => vec![a.clone(), b.clone()],
        Command::FibRank => Vec::new(),
        Command::Example { name } => vec![name.clone()],
        Command::Canon { input }
        | Command::Cfii { input }
        | Command::Bnt { input }
        | Command::Inject { input }
        | Command::RfpPure { input }
        | Command::Flow { input }
        | Command::Parent { input }
        | Command::Entropy { input }
        | Command::Validate { input }
        | Command::Zcl { input }
        | Command::Purify { input }
        | Command::Prfp { input }
        | Command::MutualInfo { input }
        | Command::Simple { input }
        | Command::Gsnnch { input }
        | Command::Channels { input }
        | Command::Vcf { input }
        | Command::Algebra { input }
        | Command::Fusion { input }
        | Command::RfpMpdo { input }
        | Command::Decompose { input }
        | Command::Decorrelate { input } => vec![input.clone()],
    }
}

fn render_text(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                render_text(&key, x, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                render_text(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::String(s) if s.contains('\n') => {
            out.push_str(s);
        }
        _ => {
            out.push_str(&format!("{prefix}: {v}\n"));
        }
    }
}

pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 1 {
                eprint!("{text}");
                return Outcome { code, stdout: String::new() };
            }
            return Outcome { code, stdout: text };
        }
    };
    let name = command_name(&cli.command);
    let (code, body) = match dispatch(&cli.command, &cli.opts) {
        Ok(v) => (0, v),
        Err(Error::NotApplicable(why)) => (0, json!({ "applicable": false, "reason": why })),
        Err(e) => (exit_code(&e), json!({ "error": e.to_string() })),
    };
    if let (Command::Example { .. }, false, 0) = (&cli.command, cli.opts.json, code) {
        return Outcome { code, stdout: body["file"].as_str().unwrap_or_default().to_string() };
    }
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("command".into(), json!(name));
    doc.insert("inputs".into(), json!(inputs(&cli.command)));
    doc.insert("seed".into(), json!(cli.opts.seed));
    doc.insert("exit_code".into(), json!(code));
    doc.insert("report".into(), body);
    let doc = Value::Object(doc);
    let stdout = if cli.opts.json {
        let mut s = serde_json::to_string_pretty(&doc).unwrap();
        s.push('\n');
        s
    } else {
        let mut s = String::new();
        render_text("", &doc["report"], &mut s);
        format!("{name} {}\n{s}", inputs(&cli.command).join(" "))
    };
    if code != 0 {
        eprintln!("mpfp {name}: {}", doc["report"]["error"].as_str().unwrap_or("failed"));
    }
    Outcome { code, stdout }
}
