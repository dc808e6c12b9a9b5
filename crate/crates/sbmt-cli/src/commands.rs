use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use sbmt::boundary::{load_bitmap, point_in_chains, trace_contours, BitmapMask};
use sbmt::exec::Exec;
use sbmt::fem::{assemble_with, run_heat, HeatParams};
use sbmt::fixtures::Fixture;
use sbmt::mesh::io::{obj_string, off_string, read_mesh_file};
use sbmt::mesh::HalfEdgeMesh;
use sbmt::preprocess::{validate_thresholds, Thresholds};
use sbmt::quality::{angle_histogram, quality_report, run_ablation, sensitivity_sweep, QualityReport};
use sbmt::remesh::{chains_from_mask, check_path_independence, grid_for_mask, PathIndependence, RemeshJob, RemeshOptions};
use sbmt::svg::{histogram_svg, render_field, render_mesh, ColorBy};
use sbmt::templates::{generate, table, verify_table};
use sbmt::Tolerance;
use serde_json::json;

use crate::config::ConfigFile;
use crate::manifest::Manifest;
use crate::{Cli, Command, EdgeLength, InputArgs, ThresholdArgs};

/// An error with its exit code: 1 for invalid configuration, 2 for a failed run.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Result<T> = std::result::Result<T, Failure>;

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: e.into() }
}

fn failed(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

/// Library errors that stem from the configuration are validation errors.
fn classify(e: sbmt::Error) -> Failure {
    match e {
        sbmt::Error::InvalidThresholds(_)
        | sbmt::Error::InvalidEdgeLength(_)
        | sbmt::Error::NonpositiveFrequency(_)
        | sbmt::Error::InvalidInput(_) => invalid(e),
        _ => failed(e),
    }
}

struct Settings {
    cfg: ConfigFile,
    threads: Option<usize>,
    exec: Exec,
    tol: Tolerance,
}

impl Settings {
    fn new(cli: &Cli) -> Result<Self> {
        let cfg = match &cli.config {
            Some(p) => ConfigFile::load(p).map_err(invalid)?,
            None => ConfigFile::default(),
        };
        let threads = cfg.get("threads", cli.threads).map_err(invalid)?;
        let tol = match cfg.get::<f64>("eps", cli.eps).map_err(invalid)? {
            Some(e) if e > 0.0 && e.is_finite() => Tolerance::new(e),
            Some(e) => return Err(invalid(anyhow!("eps must be positive, got {e}"))),
            None => Tolerance::from_env(),
        };
        Ok(Self { cfg, threads, exec: Exec::from_threads(threads), tol })
    }

    fn f64_or(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        Ok(self.cfg.get(key, flag).map_err(invalid)?.unwrap_or(default))
    }

    fn edge(&self, flag: Option<EdgeLength>) -> Result<f64> {
        Ok(self.cfg.get("e", flag).map_err(invalid)?.map_or(Thresholds::default().e, |EdgeLength(e)| e))
    }

    fn thresholds(&self, t: &ThresholdArgs) -> Result<Thresholds> {
        let d = Thresholds::default();
        let th = Thresholds::new(
            self.f64_or("a", t.a, d.a)?,
            self.f64_or("b", t.b, d.b)?,
            self.f64_or("c", t.c, d.c)?,
            self.edge(t.e)?,
        );
        let v = validate_thresholds(&th, f64::INFINITY);
        if !v.is_empty() {
            return Err(invalid(anyhow!("inadmissible thresholds: {}", v.join("; "))));
        }
        Ok(th)
    }

    fn options(&self, t: Thresholds) -> RemeshOptions {
        RemeshOptions { thresholds: t, exec: self.exec, tol: self.tol, ..Default::default() }
    }

    fn manifest(&self, command: &str) -> Manifest {
        let mut m = Manifest::new(command, self.tol.eps);
        m.threads = self.threads;
        m
    }

    fn mask(&self, input: &InputArgs) -> Result<(BitmapMask, String)> {
        let invert = input.invert || self.cfg.get::<bool>("invert", None).map_err(invalid)?.unwrap_or(false);
        if let Some(spec) = &input.fixture {
            let (name, size) = match spec.split_once(':') {
                Some((n, s)) => (n, s.parse::<usize>().map_err(|_| invalid(anyhow!("bad fixture size in {spec:?}")))?),
                None => (spec.as_str(), 200),
            };
            let f = Fixture::from_name(name).ok_or_else(|| invalid(anyhow!("unknown fixture {name:?}")))?;
            let mut m = f.mask(size);
            if invert {
                m.invert();
            }
            return Ok((m, format!("fixture:{name}:{size}")));
        }
        let path = input.input.as_ref().ok_or_else(|| invalid(anyhow!("no input given")))?;
        let m = load_bitmap(path, invert).with_context(|| format!("reading {}", path.display())).map_err(failed)?;
        Ok((m, path.display().to_string()))
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(failed)
}

fn write_mesh(path: &Path, mesh: &HalfEdgeMesh) -> Result<()> {
    let is_obj = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    write(path, if is_obj { obj_string(mesh) } else { off_string(mesh) })
}

fn read_mesh(path: &Path) -> Result<HalfEdgeMesh> {
    read_mesh_file(path).with_context(|| format!("reading {}", path.display())).map_err(failed)
}

fn report_json(r: &QualityReport) -> serde_json::Value {
    json!({
        "triangles": r.triangle_count,
        "min_angle_deg": r.min_angle,
        "min_area": r.min_area,
        "slivers": r.sliver_count,
        "equilateral_ratio": r.equilateral_ratio(),
        "ar_median": r.ar_median,
        "ar_max": r.ar_max,
    })
}

fn summary(r: &QualityReport) -> String {
    format!(
        "{} triangles, min angle {:.3}°, min area {:.4e}, {} slivers, {:.1}% equilateral, AR median {:.4}",
        r.triangle_count,
        r.min_angle,
        r.min_area,
        r.sliver_count,
        100.0 * r.equilateral_ratio(),
        r.ar_median
    )
}

pub fn run(cli: Cli) -> Result<()> {
    let s = Settings::new(&cli)?;
    match cli.command {
        Command::Trace { input, out, raw, e } => {
            let (mask, name) = s.mask(&input)?;
            let e = s.edge(e)?;
            let chains = if raw { trace_contours(&mask) } else { chains_from_mask(&mask, e) }.map_err(classify)?;
            write(&out, sbmt::boundary::chains_to_string(&chains))?;
            let pts: usize = chains.iter().map(|c| c.points.len()).sum();
            eprintln!("{} chains, {pts} vertices", chains.len());
            let mut m = s.manifest("trace");
            m.input = Some(name);
            m.outputs.push(out.display().to_string());
            m.stats = json!({ "chains": chains.len(), "vertices": pts, "raw": raw, "edge_length": e });
            m.write().map_err(failed)?;
        }
        Command::Mesh { input, thresholds, out, domain, classes, seed, check_determinism } => {
            let t = s.thresholds(&thresholds)?;
            let (mask, name) = s.mask(&input)?;
            let seed = s.cfg.get("seed", seed).map_err(invalid)?;
            let chains = chains_from_mask(&mask, t.e).map_err(classify)?;
            let job = RemeshJob::prepare(chains, &grid_for_mask(&mask, t.e), s.options(t)).map_err(classify)?;
            if let Some(k) = check_determinism {
                let seeds: Vec<u64> = (1..=k as u64).collect();
                match check_path_independence(&job, &seeds).map_err(classify)? {
                    PathIndependence::Ok { schedules } => eprintln!("determinism: {schedules} schedules agree"),
                    PathIndependence::Counterexample { seed_a, seed_b, first_diff_line } => {
                        return Err(failed(anyhow!(
                            "schedules {seed_a} and {seed_b} differ at line {first_diff_line} of the canonical serialization"
                        )));
                    }
                }
            }
            let res = job.run(seed).map_err(classify)?;
            let keep: Vec<bool> = (0..res.mesh.num_faces())
                .map(|f| {
                    let [a, b, c] = res.mesh.face_points(f);
                    !domain || point_in_chains((a + b + c) * (1.0 / 3.0), &job.boundary.chains)
                })
                .collect();
            let mesh = if domain { res.mesh.submesh(&keep).map_err(classify)? } else { res.mesh.clone() };
            write_mesh(&out, &mesh)?;
            let mut m = s.manifest("mesh");
            m.outputs.push(out.display().to_string());
            if let Some(path) = &classes {
                let mut csv = String::from("face,m,n\n");
                let kept = res.face_class.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c);
                for (f, c) in kept.enumerate() {
                    let _ = match c {
                        Some((a, b)) => writeln!(csv, "{f},{a},{b}"),
                        None => writeln!(csv, "{f},,"),
                    };
                }
                write(path, csv)?;
                m.outputs.push(path.display().to_string());
            }
            let st = &res.stats;
            if st.preprocess.conflicts > 0 {
                eprintln!("note: {} boundary points were near two edges of a face; each went to the nearest edge", st.preprocess.conflicts);
            }
            eprintln!(
                "{} vertices, {} faces; {} intersected faces ({} patched, {} unchanged, {} fan-split)",
                mesh.num_vertices(),
                mesh.num_faces(),
                st.intersected_faces,
                st.patched_faces,
                st.untouched_faces,
                st.fallback_faces
            );
            m.input = Some(name);
            m.thresholds = Some(t.into());
            m.seed = seed;
            let per_class: serde_json::Map<String, serde_json::Value> =
                st.per_class.iter().map(|((a, b), n)| (format!("{a},{b}"), json!(n))).collect();
            m.stats = json!({
                "vertices": mesh.num_vertices(),
                "faces": mesh.num_faces(),
                "domain_only": domain,
                "intersected_faces": st.intersected_faces,
                "patched_faces": st.patched_faces,
                "untouched_faces": st.untouched_faces,
                "fallback_faces": st.fallback_faces,
                "per_class": per_class,
                "snapped": st.preprocess.snapped,
                "repelled": st.preprocess.repelled,
                "eliminated": st.preprocess.eliminated,
                "deletion_conflicts": st.preprocess.conflicts,
                "determinism_schedules": check_determinism,
            });
            m.write().map_err(failed)?;
        }
        Command::Quality { mesh, csv } => {
            let r = quality_report(&read_mesh(&mesh)?).map_err(classify)?;
            eprintln!("{}", summary(&r));
            if let Some(path) = csv {
                write(&path, format!("{}\n{}\n", QualityReport::CSV_HEADER, r.csv_row()))?;
                let mut m = s.manifest("quality");
                m.input = Some(mesh.display().to_string());
                m.outputs.push(path.display().to_string());
                m.stats = report_json(&r);
                m.write().map_err(failed)?;
            }
        }
        Command::Hist { mesh, csv, svg } => {
            let h = angle_histogram(&read_mesh(&mesh)?).map_err(classify)?;
            let mode = h.centers[h.mode()];
            eprintln!("mode bin centred at {mode}°");
            let mut m = s.manifest("hist");
            m.input = Some(mesh.display().to_string());
            if let Some(p) = csv {
                write(&p, h.to_csv())?;
                m.outputs.push(p.display().to_string());
            }
            if let Some(p) = svg {
                write(&p, histogram_svg(&h))?;
                m.outputs.push(p.display().to_string());
            }
            m.stats = json!({ "mode_center_deg": mode, "raw": h.raw });
            m.write().map_err(failed)?;
        }
        Command::Render { mesh, svg, color_by, classes, width } => {
            let me = read_mesh(&mesh)?;
            let face_class = match (&classes, color_by) {
                (Some(p), _) => Some(read_classes(p, me.num_faces())?),
                (None, ColorBy::Class) => return Err(invalid(anyhow!("--color-by class needs --classes"))),
                _ => None,
            };
            write(&svg, render_mesh(&me, face_class.as_deref(), color_by, width))?;
            let mut m = s.manifest("render");
            m.input = Some(mesh.display().to_string());
            m.outputs.push(svg.display().to_string());
            m.stats = json!({ "faces": me.num_faces(), "color_by": format!("{color_by:?}").to_lowercase() });
            m.write().map_err(failed)?;
        }
        Command::Ablate { input, thresholds, csv } => {
            let t = s.thresholds(&thresholds)?;
            let (mask, name) = s.mask(&input)?;
            let rows = run_ablation(&mask, t, s.exec);
            let mut out = format!("config,snap,repel,eliminate,{},fallback_faces,error\n", QualityReport::CSV_HEADER);
            let mut stats = Vec::new();
            for r in &rows {
                if let Some(w) = r.warning() {
                    eprintln!("warning: {w}");
                }
                let (q, fb, err) = match &r.outcome {
                    Ok((q, st)) => (q.csv_row(), st.fallback_faces.to_string(), String::new()),
                    Err(e) => {
                        let cells = QualityReport::CSV_HEADER.matches(',').count();
                        (",".repeat(cells), String::new(), e.to_string().replace(',', ";"))
                    }
                };
                let _ = writeln!(out, "{},{},{},{},{q},{fb},{err}", r.name, r.rules.snap, r.rules.repel, r.rules.eliminate);
                match &r.outcome {
                    Ok((q, _)) => {
                        eprintln!("{}: {}", r.name, summary(q));
                        stats.push(json!({ "config": r.name, "report": report_json(q) }));
                    }
                    Err(e) => eprintln!("{}: failed: {e}", r.name),
                }
            }
            write(&csv, out)?;
            let mut m = s.manifest("ablate");
            m.input = Some(name);
            m.thresholds = Some(t.into());
            m.outputs.push(csv.display().to_string());
            m.stats = json!(stats);
            m.write().map_err(failed)?;
        }
        Command::Sweep { input, triplets, e, csv } => {
            let (mask, name) = s.mask(&input)?;
            let e = s.edge(e)?;
            let ts = triplets
                .iter()
                .map(|t| {
                    let v: Vec<f64> = t.split(',').map(|x| x.trim().parse()).collect::<std::result::Result<_, _>>().map_err(|_| invalid(anyhow!("bad triplet {t:?}")))?;
                    match v.as_slice() {
                        [a, b, c] => Ok(Thresholds::new(*a, *b, *c, e)),
                        _ => Err(invalid(anyhow!("triplet {t:?} needs three values"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = sensitivity_sweep(&mask, &ts, s.exec);
            let mut out = format!("a,b,c,e,{},note\n", QualityReport::CSV_HEADER);
            let cells = QualityReport::CSV_HEADER.matches(',').count();
            for r in &rows {
                let t = r.thresholds;
                let (q, note) = match &r.outcome {
                    None => {
                        eprintln!("skipped ({}, {}, {}): {}", t.a, t.b, t.c, r.invalid.join("; "));
                        (",".repeat(cells), format!("invalid: {}", r.invalid.join("; ")))
                    }
                    Some(Ok(q)) => {
                        eprintln!("({}, {}, {}): {}", t.a, t.b, t.c, summary(q));
                        (q.csv_row(), String::new())
                    }
                    Some(Err(err)) => (",".repeat(cells), format!("failed: {err}")),
                };
                let _ = writeln!(out, "{},{},{},{},{q},{}", t.a, t.b, t.c, t.e, note.replace(',', ";"));
            }
            write(&csv, out)?;
            let mut m = s.manifest("sweep");
            m.input = Some(name);
            m.outputs.push(csv.display().to_string());
            m.stats = json!({ "triplets": triplets, "edge_length": e });
            m.write().map_err(failed)?;
        }
        Command::Heat { mesh, alpha, dt, t, snapshots, sigma, amplitude, out } => {
            let d = HeatParams::default();
            let params = HeatParams {
                alpha: s.f64_or("alpha", alpha, d.alpha)?,
                dt: s.f64_or("dt", dt, d.dt)?,
                sigma: s.f64_or("sigma", sigma, d.sigma)?,
                amplitude,
                ..d
            };
            if !(params.dt > 0.0 && t > 0.0 && params.alpha > 0.0 && params.sigma > 0.0) {
                return Err(invalid(anyhow!("alpha, dt, t and sigma must be positive")));
            }
            let steps = (t / params.dt).round() as usize;
            let params = HeatParams { steps, ..params };
            let step_of = |time: f64| (time / params.dt).round() as usize;
            let snap_steps: Vec<usize> = snapshots.iter().map(|&x| step_of(x)).collect();
            let me = read_mesh(&mesh)?;
            let sys = assemble_with(&me, s.exec).map_err(classify)?;
            let run = run_heat(&me, &sys, &params, &snap_steps).map_err(classify)?;
            let mut m = s.manifest("heat");
            m.input = Some(mesh.display().to_string());
            let prefix = out.display().to_string();
            let trace_path = format!("{prefix}_trace.csv");
            let mut tr = String::from("step,time,peak,energy\n");
            for (k, (p, e)) in run.peaks.iter().zip(&run.energies).enumerate() {
                let _ = writeln!(tr, "{k},{},{p:.12e},{e:.12e}", k as f64 * params.dt);
            }
            write(Path::new(&trace_path), tr)?;
            m.outputs.push(trace_path);
            for (step, field) in &run.snapshots {
                let time = *step as f64 * params.dt;
                let base = format!("{prefix}_t{time}");
                let mut csv = String::from("vertex,x,y,u\n");
                for (v, (p, u)) in me.vertices().iter().zip(&field.values).enumerate() {
                    let _ = writeln!(csv, "{v},{},{},{u:.12e}", p.x, p.y);
                }
                write(Path::new(&format!("{base}.csv")), csv)?;
                write(Path::new(&format!("{base}.svg")), render_field(&me, &field.values, 0.0, run.peaks[0], 800.0))?;
                m.outputs.push(format!("{base}.csv"));
                m.outputs.push(format!("{base}.svg"));
            }
            eprintln!(
                "{steps} steps: peak {:.4} -> {:.4}; peak strictly decreasing: {}; energy non-increasing: {}; {} obtuse faces; {} steps flagged by the maximum principle",
                run.peaks[0],
                run.peaks[run.peaks.len() - 1],
                run.peak_strictly_decreasing(),
                run.energy_non_increasing(1e-12),
                run.obtuse_faces,
                run.max_principle_flags.len()
            );
            m.stats = json!({
                "alpha": params.alpha,
                "dt": params.dt,
                "steps": steps,
                "sigma": params.sigma,
                "amplitude": params.amplitude,
                "peak_strictly_decreasing": run.peak_strictly_decreasing(),
                "energy_non_increasing": run.energy_non_increasing(1e-12),
                "obtuse_faces": run.obtuse_faces,
                "max_principle_flags": run.max_principle_flags.len(),
            });
            m.write().map_err(failed)?;
        }
        Command::VerifyTable { write_catalog } => {
            let generated;
            let t = match &write_catalog {
                Some(path) => {
                    let (g, notes) = generate();
                    for n in &notes {
                        eprintln!("note: {n}");
                    }
                    write(path, g.to_tsv())?;
                    generated = g;
                    &generated
                }
                None => table(),
            };
            let r = verify_table(t);
            for (key, d) in &r.defects {
                eprintln!("defect in {key}: {d:?}");
            }
            for c in &r.missing_cases {
                eprintln!("reference case {c} has no entry");
            }
            for c in &r.mismatched_cases {
                eprintln!("reference case {c} disagrees with its entry");
            }
            eprintln!(
                "{} entries, {} defects, {} missing and {} mismatched reference cases",
                r.entries,
                r.defects.len(),
                r.missing_cases.len(),
                r.mismatched_cases.len()
            );
            if !r.ok() {
                return Err(failed(anyhow!("template table failed verification")));
            }
        }
        Command::Export { mesh, out } => {
            let me = read_mesh(&mesh)?;
            write_mesh(&out, &me)?;
            let mut m = s.manifest("export");
            m.input = Some(mesh.display().to_string());
            m.outputs.push(out.display().to_string());
            m.stats = json!({ "vertices": me.num_vertices(), "faces": me.num_faces() });
            m.write().map_err(failed)?;
        }
        Command::Fixture { name, size, out } => {
            let f = Fixture::from_name(&name).ok_or_else(|| invalid(anyhow!("unknown fixture {name:?}")))?;
            write(&out, f.mask(size).to_pgm())?;
        }
    }
    Ok(())
}

fn read_classes(path: &Path, faces: usize) -> Result<Vec<Option<(u8, u8)>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(failed)?;
    let mut out = vec![None; faces];
    for (n, line) in text.lines().enumerate().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let bad = || failed(anyhow!("{}:{}: expected `face,m,n`", path.display(), n + 1));
        let [f, a, b] = cells.as_slice() else { return Err(bad()) };
        let f: usize = f.parse().map_err(|_| bad())?;
        if f >= faces {
            return Err(failed(anyhow!("{}: face {f} out of range for a mesh of {faces} faces", path.display())));
        }
        if !a.is_empty() {
            out[f] = Some((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
        }
    }
    Ok(out)
}
