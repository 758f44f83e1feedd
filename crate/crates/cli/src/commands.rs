//! Command-line surface.

use crate::error::{write_file, CliError};
use crate::input::{resolve, Kind, Model, ModelInput};
use crate::matrix_io::{write_matrix, MatrixFile, MatrixHeader, CONVENTION_VERSION, FORMAT};
use crate::suites::{self, Suite, SuiteOptions};
use crate::svg::{line_plot, Series};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cube_rmatrix::integrability::{
    checkerboard_pattern, cube_survey, survey_csv, ybe_degeneration_pattern, ybe_survey, ContractionPattern, SpectralAssignment,
};
use cube_rmatrix::ising::{build_r_complex, build_weight_complex, cardy_cell_hamiltonian, CardyParams};
use cube_rmatrix::partition::{brute_force_z, gaussian_z, transfer_z, Boundary, LatticeSpec, PartitionError, Tiling, TransferBasis};
use cube_rmatrix::potts::{build_r_p_direct, build_weight_p, potts_cell_hamiltonian};
use cube_rmatrix::{critical_scan, ComplexCouplings, ComplexMatrix, FermionOrder, IsingCouplings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Vertex R-matrices of the 3D Ising and chiral Potts cube models.
///
/// Exit codes: 0 success, 1 failed checks or internal error, 2 configuration
/// error, 3 no result (e.g. no root in a scan range). The environment
/// variable CUBE_RMATRIX_THREADS caps the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "cube-rmatrix", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write W, R, W^P, R^P or a cell Hamiltonian as a JSON matrix file.
    Build(BuildArgs),
    /// Run an invariant suite and print a pass/fail report.
    Validate(ValidateArgs),
    /// Locate the free-fermion critical coupling from the momentum block.
    Scan(ScanArgs),
    /// Partition function of a small lattice by the selected routes.
    Z(ZArgs),
    /// Survey the Jacobi functions and the elliptic couplings on a grid.
    Elliptic(EllipticArgs),
    /// Yang–Baxter and cube-equation residual sweeps.
    Integrability(IntegrabilityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CouplingArgs {
    /// Model whose couplings are given.
    #[arg(long, value_enum, default_value = "ising")]
    pub model: Model,
    /// Number of states per site (Potts and chiral models).
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Couplings J1 J2 J3; for the Potts model every harmonic gets the same
    /// value. For Hcell the third value is the transverse field.
    #[arg(long = "J", num_args = 3, allow_negative_numbers = true)]
    pub j: Option<Vec<f64>>,
    /// JSON file {"N": n, "jx": [[re, im], ...], "jy": ..., "jz": ..., "h": ...}
    /// with N − 1 harmonics per axis ("h" optional, used by Hcell).
    #[arg(long = "Jk-file")]
    pub jk_file: Option<PathBuf>,
}

impl CouplingArgs {
    pub fn resolve(&self) -> Result<ModelInput, CliError> {
        resolve(self.model, self.n, self.j.as_deref(), self.jk_file.as_deref())
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub couplings: CouplingArgs,
    /// Matrix to write. W and R use the Ising conventions; WP and RP the
    /// N-state ones.
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Random draws per check (suite default when omitted).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Override the suite's tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fixed Ising couplings instead of random draws.
    #[arg(long = "J", num_args = 3, allow_negative_numbers = true)]
    pub j: Option<Vec<f64>>,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Ccw,
    Cw,
    RowMajor,
}

impl From<OrderArg> for FermionOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Ccw => FermionOrder::Ccw,
            OrderArg::Cw => FermionOrder::Cw,
            OrderArg::RowMajor => FermionOrder::RowMajor,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Coupling range LO HI of the homogeneous scan.
    #[arg(long, num_args = 2, default_values_t = [0.2, 0.35])]
    pub range: Vec<f64>,
    /// Momentum grid sizes n (n³ points each), coarse to fine.
    #[arg(long, num_args = 1.., default_values_t = [16, 32, 64])]
    pub grids: Vec<usize>,
    /// Plaquette ordering of the fermions.
    #[arg(long, value_enum, default_value = "ccw")]
    pub order: OrderArg,
    /// Output prefix; writes PREFIX.csv and PREFIX.svg.
    #[arg(long, default_value = "scan")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TilingArg {
    Single,
    Corner,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Brute,
    Transfer,
    Gaussian,
    All,
}

#[derive(Debug, Args)]
pub struct ZArgs {
    #[arg(long = "J", num_args = 3, allow_negative_numbers = true, required = true)]
    pub j: Vec<f64>,
    /// Lattice sizes LX LY LZ (even).
    #[arg(long, num_args = 3, default_values_t = [2, 2, 2])]
    pub lattice: Vec<usize>,
    #[arg(long, value_enum, default_value = "single")]
    pub tiling: TilingArg,
    #[arg(long, value_enum, default_value = "periodic")]
    pub bc: BoundaryArg,
    #[arg(long, value_enum, default_value = "all")]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct EllipticArgs {
    /// Moduli to survey.
    #[arg(long, num_args = 1.., default_values_t = [0.3, 0.6, 0.9])]
    pub k: Vec<f64>,
    /// Points per axis of the square grid in the complex plane and of the
    /// (u, w) grid.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Half-width of the complex grid.
    #[arg(long, default_value_t = 1.5)]
    pub extent: f64,
    /// Output prefix; writes PREFIX_jacobi.csv and PREFIX_baxter.csv.
    #[arg(long, default_value = "elliptic")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Face-family Yang–Baxter equation.
    Ybe,
    /// Cube equation wired to degenerate into the face equation.
    Degeneration,
    /// Cube equation with leg reversal between factors, as in the staggered lattice.
    Checkerboard,
}

#[derive(Debug, Args)]
pub struct IntegrabilityArgs {
    #[arg(long, value_enum, default_value = "ybe")]
    pub preset: Preset,
    /// Cube-equation pattern JSON {"lhs": [{"op": id, "legs": [...]}, ...], "rhs": [...]};
    /// operator ids f1..f4 and rev. Overrides the preset.
    #[arg(long)]
    pub pattern_file: Option<PathBuf>,
    /// Write the preset's pattern JSON to this path and exit.
    #[arg(long)]
    pub emit_pattern: Option<PathBuf>,
    #[arg(long, default_value_t = 0.6)]
    pub k: f64,
    /// Spectral values for the Yang–Baxter survey (all ordered triples).
    #[arg(long, num_args = 1.., default_values_t = [0.15, 0.35, 0.55, 0.75])]
    pub grid: Vec<f64>,
    /// Random spectral assignments for cube-equation surveys.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Force u2 = u1 and u4 = u6 = u3, the degenerate assignments.
    #[arg(long)]
    pub degenerate: bool,
    /// Output CSV path.
    #[arg(long, default_value = "integrability.csv")]
    pub out: PathBuf,
}

pub fn run(config: RunConfig) -> Result<(), CliError> {
    match config.command {
        Command::Build(a) => cmd_build(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Scan(a) => cmd_scan(&a),
        Command::Z(a) => cmd_z(&a),
        Command::Elliptic(a) => cmd_elliptic(&a),
        Command::Integrability(a) => cmd_integrability(&a),
    }
}

/// The requested matrix for resolved couplings.
pub fn build_matrix(input: &ModelInput, kind: Kind) -> Result<ComplexMatrix, CliError> {
    let cp = &input.couplings;
    let ising = || ComplexCouplings { j1: cp.jx[0], j2: cp.jy[0], j3: cp.jz[0] };
    match (input.model, kind) {
        (Model::Ising, Kind::W) => Ok(build_weight_complex(&ising()).into_matrix()),
        (Model::Ising, Kind::R) => Ok(build_r_complex(&ising()).into_matrix()),
        (Model::Ising, Kind::Hcell) => {
            let (j1, j2, h) = (cp.jx[0], cp.jy[0], input.field[0]);
            if j1.im != 0.0 || j2.im != 0.0 || h.im != 0.0 {
                return Err(CliError::config("the Ising cell Hamiltonian takes real J1, J2 and field"));
            }
            Ok(cardy_cell_hamiltonian(&CardyParams { j1: j1.re, j2: j2.re, h: h.re, dt: 0.0 }))
        }
        (_, Kind::Wp) => Ok(build_weight_p(cp).into_matrix()),
        (_, Kind::Rp) => Ok(build_r_p_direct(cp).map_err(CliError::internal)?.into_matrix()),
        (_, Kind::Hcell) => potts_cell_hamiltonian(cp.n, &cp.jx, &cp.jy, &input.field).map_err(CliError::config),
        (_, Kind::W | Kind::R) => Err(CliError::config("kinds W and R are Ising matrices; use WP or RP for N-state models")),
    }
}

fn cmd_build(a: &BuildArgs) -> Result<(), CliError> {
    let input = a.couplings.resolve()?;
    let m = build_matrix(&input, a.kind)?;
    let model = a.couplings.model.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let header = MatrixHeader {
        format: FORMAT.into(),
        convention: CONVENTION_VERSION,
        model,
        kind: a.kind.name().into(),
        n: input.n(),
        couplings: input.to_json(),
    };
    write_matrix(&a.out, &MatrixFile::new(header, &m))?;
    println!("wrote {}x{} {} to {}", m.nrows(), m.ncols(), a.kind.name(), a.out.display());
    Ok(())
}

fn ising_from(j: &Option<Vec<f64>>) -> Result<Option<IsingCouplings>, CliError> {
    match j.as_deref() {
        None => Ok(None),
        Some([a, b, c]) if a.is_finite() && b.is_finite() && c.is_finite() => Ok(Some(IsingCouplings::new(*a, *b, *c))),
        Some(_) => Err(CliError::config("--J takes 3 finite values")),
    }
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), CliError> {
    if a.tol.is_some_and(|t| t.is_nan() || t <= 0.0) {
        return Err(CliError::config("--tol must be positive"));
    }
    if a.samples == Some(0) {
        return Err(CliError::config("--samples must be positive"));
    }
    let opts = SuiteOptions { samples: a.samples, seed: a.seed, tol: a.tol, j: ising_from(&a.j)? };
    let report = suites::run(a.suite, &opts);
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        write_file(out, &serde_json::to_string_pretty(&report).map_err(CliError::internal)?)?;
    }
    match report.failures() {
        0 => Ok(()),
        n => Err(CliError::ChecksFailed(n)),
    }
}

fn with_ext(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_scan(a: &ScanArgs) -> Result<(), CliError> {
    let (lo, hi) = (a.range[0], a.range[1]);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::config("--range needs LO < HI"));
    }
    if a.grids.iter().any(|&n| n < 2) {
        return Err(CliError::config("--grids sizes must be at least 2"));
    }
    let scan = match critical_scan(lo, hi, &a.grids, a.order.into()) {
        Ok(s) => s,
        Err(e @ PartitionError::NoRoot { .. }) => return Err(CliError::NoResult(e.to_string())),
        Err(e) => return Err(CliError::internal(e)),
    };
    let csv = with_ext(&a.out, ".csv");
    write_file(&csv, &scan.to_csv())?;
    let series: Vec<Series> = a
        .grids
        .iter()
        .map(|&n| {
            let mut points: Vec<(f64, f64)> = scan.rows.iter().filter(|r| r.grid == n).map(|r| (r.j, r.min_det)).collect();
            points.sort_by(|x, y| x.0.total_cmp(&y.0));
            Series { label: format!("n = {n}"), points }
        })
        .collect();
    let svg = with_ext(&a.out, ".svg");
    write_file(&svg, &line_plot("minimum |det| of the momentum block", "J", "min |det|", &series, true))?;
    for r in &scan.per_grid {
        println!("grid {:>4}: J = {:.12}", r.grid, r.j);
    }
    println!("estimate J_c = {:.10} +/- {:.2e}", scan.estimate, scan.error);
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}

fn cmd_z(a: &ZArgs) -> Result<(), CliError> {
    let j = ising_from(&Some(a.j.clone()))?.expect("three values");
    let tiling = match a.tiling {
        TilingArg::Single => Tiling::SingleSublattice,
        TilingArg::Corner => Tiling::CornerSharing,
    };
    let bc = match a.bc {
        BoundaryArg::Periodic => Boundary::Periodic,
        BoundaryArg::Open => Boundary::Open,
    };
    if bc == Boundary::Open {
        return Err(CliError::config("open boundaries are not supported by the partition routes; use --bc periodic"));
    }
    let spec = LatticeSpec::new(a.lattice[0], a.lattice[1], a.lattice[2], tiling, bc).map_err(CliError::config)?;
    type Route<'a> = Box<dyn Fn() -> Result<cube_rmatrix::partition::ScaledZ, PartitionError> + 'a>;
    let routes: Vec<(&str, Route)> = vec![
        ("brute", Box::new(|| brute_force_z(&j, &spec))),
        ("transfer", Box::new(|| transfer_z(&j, &spec, TransferBasis::Weight))),
        ("transfer-R", Box::new(|| transfer_z(&j, &spec, TransferBasis::Vertex))),
        ("gaussian", Box::new(|| gaussian_z(&j, &spec))),
    ];
    let mut any = false;
    for (name, f) in routes {
        let wanted = matches!(
            (a.method, name),
            (Method::All, _) | (Method::Brute, "brute") | (Method::Transfer, "transfer" | "transfer-R") | (Method::Gaussian, "gaussian")
        );
        if !wanted {
            continue;
        }
        match f() {
            Ok(z) => {
                any = true;
                let ln = z.ln();
                println!("{name:>10}: ln Z = {:.15} {:+.3e}i", ln.re, ln.im);
            }
            Err(e) => println!("{name:>10}: unavailable ({e})"),
        }
    }
    if any {
        Ok(())
    } else {
        Err(CliError::NoResult("no route could evaluate this lattice".into()))
    }
}

fn cmd_elliptic(a: &EllipticArgs) -> Result<(), CliError> {
    use cube_rmatrix::elliptic::{baxter_couplings, identity_residual, jacobi, EllipticPoint};
    if a.grid < 2 || a.extent.is_nan() || a.extent <= 0.0 {
        return Err(CliError::config("--grid must be at least 2 and --extent positive"));
    }
    if let Some(k) = a.k.iter().find(|k| !(**k > 0.0 && **k < 1.0)) {
        return Err(CliError::config(format!("--k {k} outside (0, 1)")));
    }
    let n = a.grid;
    let mut jac = String::from("k,re,im,sn_re,sn_im,cn_re,cn_im,dn_re,dn_im,identity_residual,error\n");
    let mut bax = String::from("k,u,w,J1_re,J1_im,J2_re,J2_im,J3_re,J3_im,product_residual,near_branch_cut,error\n");
    let mut worst = 0.0f64;
    for &k in &a.k {
        for p in 0..n {
            for q in 0..n {
                let step = 2.0 * a.extent / (n - 1) as f64;
                let z = cube_rmatrix::C64::new(-a.extent + step * p as f64, -a.extent + step * q as f64);
                match (jacobi(z, k), identity_residual(z, k)) {
                    (Ok((s, c, d)), Ok(r)) => {
                        worst = worst.max(r);
                        jac.push_str(&format!("{k},{},{},{},{},{},{},{},{},{r:e},\n", z.re, z.im, s.re, s.im, c.re, c.im, d.re, d.im));
                    }
                    (Err(e), _) | (_, Err(e)) => jac.push_str(&format!("{k},{},{},,,,,,,,{e}\n", z.re, z.im)),
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                let (u, w) = (0.8 * (p + 1) as f64 / n as f64, 0.8 * q as f64 / n as f64);
                let row = EllipticPoint::real(u, w, k).and_then(|pt| baxter_couplings(&pt));
                match row {
                    Ok(b) => {
                        let c = b.couplings;
                        let pr = b.product_residual.iter().copied().fold(0.0, f64::max);
                        bax.push_str(&format!(
                            "{k},{u},{w},{},{},{},{},{},{},{pr:e},{},\n",
                            c.j1.re, c.j1.im, c.j2.re, c.j2.im, c.j3.re, c.j3.im, b.near_branch_cut
                        ));
                    }
                    Err(e) => bax.push_str(&format!("{k},{u},{w},,,,,,,,,{e}\n")),
                }
            }
        }
    }
    let (pj, pb) = (with_ext(&a.out, "_jacobi.csv"), with_ext(&a.out, "_baxter.csv"));
    write_file(&pj, &jac)?;
    write_file(&pb, &bax)?;
    println!("largest Jacobi identity residual {worst:.3e}");
    println!("wrote {} and {}", pj.display(), pb.display());
    Ok(())
}

fn read_pattern(path: &std::path::Path) -> Result<ContractionPattern, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let p: ContractionPattern = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))?;
    p.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(p)
}

fn cmd_integrability(a: &IntegrabilityArgs) -> Result<(), CliError> {
    if !(a.k > 0.0 && a.k < 1.0) {
        return Err(CliError::config(format!("--k {} outside (0, 1)", a.k)));
    }
    let preset_pattern = match a.preset {
        Preset::Ybe | Preset::Degeneration => ybe_degeneration_pattern(),
        Preset::Checkerboard => checkerboard_pattern(),
    };
    if let Some(path) = &a.emit_pattern {
        write_file(path, &preset_pattern.to_json())?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let (columns, rows): (Vec<&str>, _) = match (a.preset, &a.pattern_file) {
        (Preset::Ybe, None) => (vec!["u1", "u2", "u3"], ybe_survey(a.k, &a.grid)),
        (_, file) => {
            let pattern = match file {
                Some(p) => read_pattern(p)?,
                None => preset_pattern,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let assignments: Vec<SpectralAssignment> = (0..a.samples)
                .map(|_| {
                    let mut u = [0.0; 6];
                    for x in &mut u {
                        *x = rng.random_range(0.05..0.9);
                    }
                    if a.degenerate {
                        (u[1], u[3], u[5]) = (u[0], u[2], u[2]);
                    }
                    SpectralAssignment { u }
                })
                .collect();
            (vec!["u1", "u2", "u3", "u4", "u5", "u6"], cube_survey(a.k, &assignments, &pattern))
        }
    };
    write_file(&a.out, &survey_csv(&columns, &rows))?;
    let vals: Vec<f64> = rows.iter().filter_map(|r| r.residual).collect();
    let singular = rows.len() - vals.len();
    let max = vals.iter().copied().fold(0.0, f64::max);
    let satisfied = rows.iter().filter(|r| r.satisfied()).count();
    println!("{} points, {} singular, {satisfied} satisfied (< 1e-8), largest residual {max:.3e}", rows.len(), singular);
    println!("wrote {}", a.out.display());
    Ok(())
}
