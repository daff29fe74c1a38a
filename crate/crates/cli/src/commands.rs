use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use stensor::analysis::{
    indefiniteness_report, min_eigenvalue_field, orientation_error, orientation_field, rank_profile,
    IndefinitenessReport,
};
use stensor::filterbank::{
    apply_bank, bank_from_directions, transfer_planes, FilterKind, FilterSpec, ResponseField, ResponseMode,
};
use stensor::io::{
    encode_pgm, read_pgm, responses_to_raw, scalar_from_raw, scalar_to_raw, tensor_from_raw, tensor_to_raw, write_csv,
    write_orientation_ppm, RawRaster, SCALAR_TAG,
};
use stensor::linalg::{eig_sym, SymMat};
use stensor::repro::{counterexample, COUNTEREXAMPLE_Q};
use stensor::synth::{add_noise, linear_symmetric, superpose};
use stensor::tensor::{
    gradient_tensor, spectral_moment_tensor, tensor_bg, tensor_gk, upsample2x, Boundary, GradientOptions,
};
use stensor::{Construction, DirectionSet, FrameCoefficients, ScalarField, TensorField};

use crate::parse;
use crate::{
    AnalyzeArgs, BankArgs, BankCommandArgs, CliError, CliResult, Command, CompareArgs, ReproArgs, SynthArgs, TensorArgs,
};

pub(crate) fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::ReproExample(a) => repro_example(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Bank(a) => bank(a, out),
        Command::Tensor(a) => tensor(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Compare(a) => compare(a, out),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

fn read_raw(path: &Path) -> CliResult<RawRaster> {
    RawRaster::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Prints `metric,value` rows.
fn write_metrics(out: &mut dyn Write, rows: &[(&str, String)]) -> CliResult<()> {
    let header = vec!["metric".to_string(), "value".to_string()];
    let rows: Vec<Vec<String>> = rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    write_csv(out, &header, &rows)?;
    Ok(())
}

fn trimmed(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn repro_example(a: ReproArgs, out: &mut dyn Write) -> CliResult<()> {
    let q = match &a.q {
        Some(s) => parse::f64_list(s, "q")?,
        None => COUNTEREXAMPLE_Q.to_vec(),
    };
    if q.len() != 6 {
        return Err(usage(format!("--q needs six magnitudes, got {}", q.len())));
    }
    let coef = a
        .coeff
        .as_deref()
        .map(parse::coefficients)
        .transpose()?
        .unwrap_or(FrameCoefficients::ICOSA6);
    let markdown = match a.format.as_str() {
        "markdown" => true,
        "csv" => false,
        other => return Err(usage(format!("unknown format '{other}' (markdown or csv)"))),
    };
    let r = counterexample(&q, coef)?;

    let mut rows: Vec<(String, String)> = vec![
        (
            "q".into(),
            q.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        ),
        ("alpha".into(), coef.alpha.to_string()),
        ("beta".into(), coef.beta.to_string()),
    ];
    let dense = r.gk.tensor.to_dense();
    for i in 0..3 {
        for j in i..3 {
            rows.push((format!("T_GK[{i}][{j}]"), format!("{:+.17e}", dense[i][j])));
        }
    }
    for (name, s) in [("T_GK", &r.gk), ("T_BG", &r.bg)] {
        for (i, l) in s.eigenvalues.iter().enumerate() {
            rows.push((format!("{name} lambda{}", i + 1), format!("{l:+.17e}")));
        }
        rows.push((format!("trace({name})"), trimmed(s.trace)));
        rows.push((
            format!("{name} negative eigenvalue count"),
            s.negative_count.to_string(),
        ));
        rows.push((format!("{name} PSD"), s.psd.to_string()));
    }

    let mut text = Vec::new();
    if markdown {
        writeln!(text, "| quantity | value |")?;
        writeln!(text, "|---|---|")?;
        for (k, v) in &rows {
            writeln!(text, "| {k} | {v} |")?;
        }
        writeln!(text)?;
        writeln!(text, "T_GK negative eigenvalue count = {}", r.gk.negative_count)?;
        writeln!(text, "trace(T_GK) = {}", trimmed(r.gk.trace))?;
        writeln!(text, "T_BG PSD = {}", r.bg.psd)?;
    } else {
        let header = vec!["quantity".to_string(), "value".to_string()];
        let rows: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k, v]).collect();
        write_csv(&mut text, &header, &rows)?;
    }
    match &a.output {
        Some(p) => create(p)?.write_all(&text)?,
        None => out.write_all(&text)?,
    }
    if r.holds() {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "expected >= 2 negative T_GK eigenvalues and PSD T_BG; got {} and PSD = {}",
            r.gk.negative_count, r.bg.psd
        )))
    }
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let dims = parse::dims(&a.dims)?;
    if !(a.noise >= 0.0) || !a.noise.is_finite() {
        return Err(usage("--noise must be a finite sigma >= 0"));
    }
    let specs = a
        .wave
        .iter()
        .map(|w| parse::wave(w, &dims))
        .collect::<CliResult<Vec<_>>>()?;
    let waves = specs
        .iter()
        .map(|s| linear_symmetric(&dims, s, a.periodic))
        .collect::<stensor::Result<Vec<_>>>()?;
    let f = add_noise(&superpose(&waves)?, a.noise, a.seed)?;
    scalar_to_raw(&f)?.write(&a.output)?;
    if let Some(p) = &a.pgm {
        let (lo, hi) = f
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let scaled = ScalarField::new(f.dims(), f.values().iter().map(|v| (v - lo) / span).collect(), false)?;
        create(p)?.write_all(&encode_pgm(&scaled, 255)?)?;
    }
    write_metrics(
        out,
        &[
            ("dims", a.dims.clone()),
            ("waves", specs.len().to_string()),
            ("noise", a.noise.to_string()),
            ("seed", a.seed.to_string()),
        ],
    )
}

fn load_image(path: &Path) -> CliResult<ScalarField> {
    if is_pgm(path) {
        return Ok(read_pgm(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
            .into_field()?);
    }
    let raw = read_raw(path)?;
    if raw.header.tag != SCALAR_TAG {
        return Err(usage(format!(
            "{} holds '{}', not an image",
            path.display(),
            raw.header.tag
        )));
    }
    Ok(scalar_from_raw(&raw)?)
}

struct Responses {
    q: Vec<ResponseField>,
    dirs_spec: String,
    dirs: DirectionSet,
    mode: ResponseMode,
}

struct BankRun {
    responses: Responses,
    specs: Vec<FilterSpec>,
}

fn run_bank(f: &ScalarField, b: &BankArgs) -> CliResult<BankRun> {
    let dirs_spec = match &b.directions {
        Some(s) => s.clone(),
        None => parse::default_directions(f.ndim())?.to_string(),
    };
    let dirs = parse::directions(&dirs_spec)?;
    if dirs.dim() != f.ndim() {
        return Err(usage(format!(
            "direction set '{dirs_spec}' is {}-D, image is {}-D",
            dirs.dim(),
            f.ndim()
        )));
    }
    let kind: FilterKind = b.kind.parse()?;
    let mode = parse::response_mode(b.response_mode.as_deref())?;
    let specs = bank_from_directions(&dirs, kind, b.center_frequency, b.bandwidth, b.exponent)?;
    let q = apply_bank(f, &specs, mode)?;
    Ok(BankRun {
        responses: Responses {
            q,
            dirs_spec,
            dirs,
            mode,
        },
        specs,
    })
}

enum Input {
    Image(ScalarField),
    Responses(Responses),
}

fn load_input(path: &Path) -> CliResult<Input> {
    if is_pgm(path) {
        return Ok(Input::Image(load_image(path)?));
    }
    let raw = read_raw(path)?;
    if raw.header.tag == SCALAR_TAG {
        return Ok(Input::Image(scalar_from_raw(&raw)?));
    }
    match parse::parse_responses_tag(&raw.header.tag)? {
        Some(tag) => {
            let dirs = parse::directions(&tag.dirs)?;
            let q = stensor::io::responses_from_raw(&raw)?;
            if q.len() != dirs.len() {
                return Err(CliError::Io(format!(
                    "{}: {} planes for {} directions",
                    path.display(),
                    q.len(),
                    dirs.len()
                )));
            }
            Ok(Input::Responses(Responses {
                q,
                dirs_spec: tag.dirs,
                dirs,
                mode: tag.mode,
            }))
        }
        None => Err(usage(format!(
            "{} holds '{}', expected an image or bank responses",
            path.display(),
            raw.header.tag
        ))),
    }
}

/// Responses from a file, or from running the bank on an image.
fn responses_for(path: &Path, b: &BankArgs) -> CliResult<Responses> {
    match load_input(path)? {
        Input::Image(f) => Ok(run_bank(&f, b)?.responses),
        Input::Responses(r) => {
            if let Some(m) = &b.response_mode {
                let m: ResponseMode = m.parse()?;
                if m != r.mode {
                    return Err(usage(format!(
                        "--response-mode {} conflicts with responses computed in {} mode",
                        m.as_str(),
                        r.mode.as_str()
                    )));
                }
            }
            Ok(r)
        }
    }
}

fn bank(a: BankCommandArgs, out: &mut dyn Write) -> CliResult<()> {
    let f = load_image(&a.input)?;
    let run = run_bank(&f, &a.bank)?;
    let r = &run.responses;
    if let Some(p) = &a.output {
        responses_to_raw(&r.q, &parse::responses_tag(&r.dirs_spec, r.mode))?.write(p)?;
    }
    if let Some(p) = &a.dump_directions {
        r.dirs.write_csv(create(p)?)?;
    }
    if let Some(p) = &a.dump_transfer {
        let planes = transfer_planes(&run.specs, f.shape())?;
        RawRaster::from_f64(f.dims(), &planes, format!("transfer;dirs={}", r.dirs_spec))?.write(p)?;
    }
    let header = vec!["filter".to_string(), "mean_response".to_string()];
    let rows: Vec<Vec<String>> =
        r.q.iter()
            .map(|q| {
                let mean = stensor::linalg::pairwise_sum(q.values()) / q.values().len() as f64;
                vec![q.label().to_string(), format!("{mean:e}")]
            })
            .collect();
    write_csv(out, &header, &rows)?;
    Ok(())
}

fn frame_coefficients(coeff: Option<&str>, r: &Responses) -> CliResult<FrameCoefficients> {
    match coeff {
        Some(s) => parse::coefficients(s),
        None => FrameCoefficients::for_directions(&r.dirs).ok_or_else(|| {
            usage(format!(
                "no default frame coefficients for '{}'; pass --coeff alpha,beta",
                r.dirs_spec
            ))
        }),
    }
}

fn tensor(a: TensorArgs, out: &mut dyn Write) -> CliResult<()> {
    let construction: Construction = a.construction.parse()?;
    let tf = match construction {
        Construction::Gk | Construction::Bg => {
            // Upsampled: the bank runs at half the centre frequency on the fine
            // grid, so it sees the same band; squaring happens there and the
            // tensor is sampled back onto the input grid.
            let r = if a.upsample {
                let f = match load_input(&a.input)? {
                    Input::Image(f) => f,
                    Input::Responses(_) => {
                        return Err(usage("--upsample needs an image input; responses are already squared"))
                    }
                };
                let mut fine = a.bank.clone();
                fine.center_frequency /= 2.0;
                run_bank(&upsample2x(&f)?, &fine)?.responses
            } else {
                responses_for(&a.input, &a.bank)?
            };
            let tf = if construction == Construction::Gk {
                let coef = frame_coefficients(a.coeff.as_deref(), &r)?;
                tensor_gk(&r.q, &r.dirs, coef)?
            } else {
                tensor_bg(&r.q, &r.dirs)?
            };
            if a.upsample {
                tf.decimate(2)?
            } else {
                tf
            }
        }
        Construction::Gradient | Construction::Spectral => {
            let f = match load_input(&a.input)? {
                Input::Image(f) => f,
                Input::Responses(_) => {
                    return Err(usage(format!("the {construction} construction needs an image input")))
                }
            };
            if construction == Construction::Gradient {
                let boundary: Boundary = a.boundary.parse()?;
                gradient_tensor(
                    &f,
                    a.sigma_d,
                    a.sigma_o,
                    GradientOptions {
                        boundary,
                        upsample: a.upsample,
                    },
                )?
            } else {
                let t = if a.upsample {
                    let scale = 4.0 / 2f64.powi(f.ndim() as i32);
                    spectral_moment_tensor(&upsample2x(&f)?)?.scaled(scale)
                } else {
                    spectral_moment_tensor(&f)?
                };
                TensorField::global(&t, Construction::Spectral)?
            }
        }
    };
    tensor_to_raw(&tf)?.write(&a.output)?;
    write_metrics(
        out,
        &[
            ("construction", construction.to_string()),
            (
                "dims",
                tf.shape()
                    .dims()
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("tensor_dim", tf.tensor_dim().to_string()),
        ],
    )
}

fn interior(tf: &TensorField, margin: usize) -> Vec<usize> {
    let shape = tf.shape();
    let mut c = vec![0; shape.ndim()];
    (0..tf.pixel_count())
        .filter(|&p| {
            shape.unravel(p, &mut c);
            c.iter().zip(shape.dims()).all(|(&x, &d)| x >= margin && x + margin < d)
        })
        .collect()
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let tf = tensor_from_raw(&read_raw(&a.input)?)?;
    let n = tf.tensor_dim();
    let truth = match (a.truth_angle, &a.truth_dir) {
        (Some(_), Some(_)) => return Err(usage("give --truth-angle or --truth-dir, not both")),
        (Some(deg), None) => {
            if n != 2 {
                return Err(usage("--truth-angle needs a 2-D field; use --truth-dir"));
            }
            let (s, c) = deg.to_radians().sin_cos();
            Some(vec![c, s])
        }
        (None, Some(d)) => {
            let v = parse::unit_vector(d, "truth-dir")?;
            if v.len() != n {
                return Err(usage(format!(
                    "--truth-dir has {} components for a {n}-D field",
                    v.len()
                )));
            }
            Some(v)
        }
        (None, None) => None,
    };
    if a.check && truth.is_none() {
        return Err(usage("--check needs --truth-angle or --truth-dir"));
    }
    let pixels = interior(&tf, a.margin);
    if pixels.is_empty() {
        return Err(usage(format!("margin {} leaves no interior pixels", a.margin)));
    }
    let est = orientation_field(&tf)?;

    let count = pixels.len() as f64;
    let mean_of = |f: &dyn Fn(usize) -> f64| -> f64 {
        stensor::linalg::pairwise_sum(&pixels.iter().map(|&p| f(p)).collect::<Vec<_>>()) / count
    };
    let mean_certainty = mean_of(&|p| est[p].certainty);
    let mean_tls = mean_of(&|p| est[p].tls_error);
    let mut mean_tensor = SymMat::zeros(n);
    for &p in &pixels {
        mean_tensor.add_scaled(&tf.at(p), 1.0 / count);
    }
    let rank = rank_profile(&mean_tensor, a.rank_tol)?;
    let report = indefiniteness_report(&tf, a.indefinite_tol)?;

    let mut rows = vec![
        ("construction", tf.construction().to_string()),
        ("pixels", pixels.len().to_string()),
        ("mean_certainty", format!("{mean_certainty:.12}")),
        ("mean_tls_error", format!("{mean_tls:e}")),
        ("mean_tensor_near_zero_count", rank.near_zero_count.to_string()),
        ("negative_fraction", report.negative_fraction.to_string()),
        ("global_min_eigenvalue", format!("{:e}", report.global_min_eigenvalue)),
    ];
    let mut mean_error = 0.0;
    if let Some(k) = &truth {
        let errors: Vec<f64> = pixels
            .iter()
            .map(|&p| orientation_error(&est[p].direction, k).to_degrees())
            .collect();
        mean_error = stensor::linalg::pairwise_sum(&errors) / count;
        let max_error = errors.iter().cloned().fold(0.0, f64::max);
        rows.push(("mean_angle_error_deg", format!("{mean_error:.6}")));
        rows.push(("max_angle_error_deg", format!("{max_error:.6}")));
    }
    match &a.report {
        Some(p) => write_metrics(&mut create(p)?, &rows)?,
        None => write_metrics(out, &rows)?,
    }
    if let Some(p) = &a.indefiniteness {
        write_csv(create(p)?, &IndefinitenessReport::csv_header(), &[report.csv_row()])?;
    }
    if let Some(p) = &a.orientation_ppm {
        if n != 2 {
            return Err(usage("--orientation-ppm needs a 2-D field"));
        }
        let angles: Vec<f64> = est.iter().map(|e| e.direction[1].atan2(e.direction[0])).collect();
        let certainty: Vec<f64> = est.iter().map(|e| e.certainty).collect();
        write_orientation_ppm(&angles, &certainty, tf.shape().dims(), p)?;
    }
    if a.check && mean_error > a.max_error_deg {
        return Err(CliError::Check(format!(
            "mean angular error {mean_error:.4}° exceeds {}°",
            a.max_error_deg
        )));
    }
    Ok(())
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> CliResult<()> {
    let r = responses_for(&a.input, &a.bank)?;
    let coef = frame_coefficients(a.coeff.as_deref(), &r)?;
    let gk = tensor_gk(&r.q, &r.dirs, coef)?;
    let bg = tensor_bg(&r.q, &r.dirs)?;
    let rg = indefiniteness_report(&gk, a.indefinite_tol)?;
    let rb = indefiniteness_report(&bg, a.indefinite_tol)?;
    let dims = gk.shape().dims().to_vec();
    for (path, tf, label) in [(&a.min_eig_gk, &gk, "gk"), (&a.min_eig_bg, &bg, "bg")] {
        if let Some(p) = path {
            let m = min_eigenvalue_field(tf)?;
            RawRaster::from_f64(&dims, &[m], format!("min_eigenvalue;construction={label}"))?.write(p)?;
        }
    }
    if let Some(p) = &a.report {
        write_csv(
            create(p)?,
            &IndefinitenessReport::csv_header(),
            &[rg.csv_row(), rb.csv_row()],
        )?;
    }

    // orientation deltas where both tensors have a positive top eigenvalue
    let mut deltas = Vec::new();
    for p in 0..gk.pixel_count() {
        let eg = eig_sym(&gk.at(p))?;
        let eb = eig_sym(&bg.at(p))?;
        if eg.eigenvalues[0] > 0.0 && eb.eigenvalues[0] > 0.0 {
            deltas.push(orientation_error(&eg.eigenvectors[0], &eb.eigenvectors[0]).to_degrees());
        }
    }
    let mean_delta = if deltas.is_empty() {
        0.0
    } else {
        stensor::linalg::pairwise_sum(&deltas) / deltas.len() as f64
    };
    let max_delta = deltas.iter().cloned().fold(0.0, f64::max);
    write_metrics(
        out,
        &[
            ("pixels", gk.pixel_count().to_string()),
            ("gk_negative_fraction", rg.negative_fraction.to_string()),
            ("bg_negative_fraction", rb.negative_fraction.to_string()),
            ("gk_global_min_eigenvalue", format!("{:e}", rg.global_min_eigenvalue)),
            ("bg_global_min_eigenvalue", format!("{:e}", rb.global_min_eigenvalue)),
            ("compared_pixels", deltas.len().to_string()),
            ("orientation_delta_mean_deg", format!("{mean_delta:.6}")),
            ("orientation_delta_max_deg", format!("{max_delta:.6}")),
        ],
    )?;
    if a.check && rb.negative_pixels > 0 {
        return Err(CliError::Check(format!(
            "bg field has {} indefinite pixels",
            rb.negative_pixels
        )));
    }
    Ok(())
}
