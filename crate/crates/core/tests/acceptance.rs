//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use poster_core::backends::mock::MockServer;
use poster_core::backends::{
    generate_background, stylize_local, BackendError, BackendKind, StylizeRequest,
};
use poster_core::compose::{blend, gaussian_feather, gaussian_kernel};
use poster_core::dataset::{
    export_finetune, Corpus, RecordKind, TEMPLATE_PLANNER_V1,
};
use poster_core::doc::{serialize, Alignment, Role, TypographySpec};
use poster_core::eval::{evaluate_corpus, word_prf, EvalPoster, WordMultiset};
use poster_core::pipeline::{run_pipeline, PipelineConfig, PosterRequest, RequestItem};
use poster_core::plan::{
    parse_plan_response, plan_rule_based, BackgroundDescriptor, Canvas, FixedBox, PlanItem,
    PlanRequest, UserConstraints,
};
use poster_core::raster::{CoverageMask, RasterImage, Rgba};
use poster_core::text::FontRegistry;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> RasterImage {
    let data = (0..w * h * 4).map(|_| rng.random()).collect();
    RasterImage::from_raw(w, h, data).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32) -> CoverageMask {
    let v = (0..w * h).map(|_| rng.random::<f32>()).collect();
    CoverageMask::from_values(w, h, v).unwrap()
}

// ---------------------------------------------------------------- exact text

const VOCAB: &[&str] = &[
    "grand", "opening", "café", "Zürich", "crème", "brûlée", "Ñandú", "São", "Paulo", "jazz",
    "night", "fiesta", "Ångström", "naïve", "façade", "élan", "Łódź", "über", "señor", "10am",
    "May", "free", "entry", "live", "music", "Dvořák", "Kraków", "déjà", "vu", "Øresund",
];

fn synthetic_request(rng: &mut ChaCha8Rng, i: usize) -> PosterRequest {
    let mut words = |lo: usize, hi: usize| {
        let n = rng.random_range(lo..=hi);
        (0..n)
            .map(|_| *VOCAB.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut items = vec![RequestItem::new(Role::Title, words(1, 4))];
    if i % 3 != 0 {
        items.push(RequestItem::new(Role::Subtitle, words(2, 8)));
    }
    let infos = i % 4;
    for _ in 0..infos {
        items.push(RequestItem::new(Role::Information, words(1, 12)));
    }
    if i % 5 == 0 {
        items.push(RequestItem::new(Role::Information, words(12, 12)));
    }
    PosterRequest {
        background_prompt: Some(words(2, 5)),
        items,
        ..Default::default()
    }
}

fn exact_text() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let registry = FontRegistry::builtin();
    let start = Instant::now();
    let mut outputs = Vec::new();
    for i in 0..24 {
        let config = PipelineConfig {
            seed: i as u64,
            ..Default::default()
        };
        let req = synthetic_request(&mut rng, i);
        let out = run_pipeline(&req, &config, &registry, None)
            .map_err(|e| format!("request {i}: {e}"))?;
        outputs.push(out);
    }
    let posters: Vec<EvalPoster<'_>> = outputs
        .iter()
        .enumerate()
        .map(|(i, o)| EvalPoster {
            id: format!("req-{i}"),
            image: &o.image,
            document: &o.document,
        })
        .collect();
    let report = evaluate_corpus(&posters, &registry, None, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for p in &report.per_poster {
        check(p.precision == 1.0 && p.recall == 1.0, || {
            format!("{}: precision {} recall {}", p.id, p.precision, p.recall)
        })?;
    }
    check(elapsed < Duration::from_secs(30), || {
        format!("runtime {:.1}s exceeds 30s", elapsed.as_secs_f64())
    })?;
    Ok(format!(
        "{} posters, {} words, P=R=1.0 on each, {:.1}s",
        report.per_poster.len(),
        report.specified_total,
        elapsed.as_secs_f64()
    ))
}

// --------------------------------------------------------------------- blend

fn blend_endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (w, h) = (rng.random_range(1..=24), rng.random_range(1..=24));
        let a = random_image(&mut rng, w, h);
        let b = random_image(&mut rng, w, h);
        let one = blend(&a, &b, &CoverageMask::filled(w, h, 1.0)).map_err(|e| e.to_string())?;
        let zero = blend(&a, &b, &CoverageMask::filled(w, h, 0.0)).map_err(|e| e.to_string())?;
        check(one.as_raw() == a.as_raw(), || "m = 1 differs from I1".into())?;
        check(zero.as_raw() == b.as_raw(), || "m = 0 differs from I2".into())?;
        let m = random_mask(&mut rng, w, h);
        let mid = blend(&a, &b, &m).map_err(|e| e.to_string())?;
        for (p, &mv) in m.values().iter().enumerate() {
            for c in 0..4 {
                let (x, y, z) = (a.as_raw()[p * 4 + c], b.as_raw()[p * 4 + c], mid.as_raw()[p * 4 + c]);
                let exact = mv as f64 * x as f64 + (1.0 - mv as f64) * y as f64;
                let err = (z as f64 - exact).abs();
                worst = worst.max(err);
                check(err <= 1.0, || format!("pixel off by {err}"))?;
                check(z >= x.min(y).saturating_sub(1) && z <= x.max(y).saturating_add(1), || {
                    "outside the convex hull".into()
                })?;
            }
        }
    }
    Ok(format!("100 pairs bit-exact at m=0/1; max mid-mask error {worst:.3}"))
}

// ------------------------------------------------------------------- feather

fn direct_feather(mask: &CoverageMask, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut weights = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push((dx, dy, (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp()));
        }
    }
    let total: f64 = weights.iter().map(|w| w.2).sum();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for &(dx, dy, wt) in &weights {
                let sx = (x + dx).clamp(0, w - 1);
                let sy = (y + dy).clamp(0, h - 1);
                acc += wt * mask.get(sx as u32, sy as u32) as f64;
            }
            out.push(acc / total);
        }
    }
    out
}

fn feather() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let sigmas = [0.5, 1.0, 2.0, 5.0];
    let mut worst = 0.0f64;
    for i in 0..50 {
        let m = random_mask(&mut rng, 16, 16);
        let sigma = sigmas[i % sigmas.len()];
        let fast = gaussian_feather(&m, sigma);
        let oracle = direct_feather(&m, sigma);
        for (a, b) in fast.values().iter().zip(&oracle) {
            let err = (*a as f64 - b).abs();
            worst = worst.max(err);
            check(err <= 1e-4, || format!("sigma {sigma}: error {err:e}"))?;
        }
    }
    for s in sigmas {
        let sum: f64 = gaussian_kernel(s).iter().sum();
        check((sum - 1.0).abs() <= 1e-6, || format!("kernel sum {sum} for sigma {s}"))?;
    }
    for c in [0.0f32, 0.25, 0.5, 1.0] {
        for s in sigmas {
            let m = CoverageMask::filled(16, 16, c);
            let f = gaussian_feather(&m, s);
            check(f.values().iter().all(|&v| v == c), || {
                format!("constant {c} not a fixpoint at sigma {s}")
            })?;
        }
    }
    Ok(format!("50 masks, max error {worst:.2e}; kernel sums and constant fixpoints hold"))
}

// --------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let req = PosterRequest {
        background_prompt: Some("autumn market".into()),
        items: vec![
            RequestItem::new(Role::Title, "Harvest Fête"),
            RequestItem::new(Role::Subtitle, "apples, cider, crème"),
            RequestItem::new(Role::Information, "Sunday 9am to 4pm"),
        ],
        ..Default::default()
    };
    let config = PipelineConfig {
        seed: 2024,
        ..Default::default()
    };
    let a = run_pipeline(&req, &config, &FontRegistry::builtin(), None).map_err(|e| e.to_string())?;
    let b = run_pipeline(&req, &config, &FontRegistry::builtin(), None).map_err(|e| e.to_string())?;
    let (pa, pb) = (a.image.to_png().unwrap(), b.image.to_png().unwrap());
    check(pa == pb, || "PNG bytes differ".into())?;
    let (da, db) = (serialize(&a.document), serialize(&b.document));
    check(da == db, || "document bytes differ".into())?;
    Ok(format!("{} PNG bytes and {} document bytes identical", pa.len(), da.len()))
}

// ------------------------------------------------------------------ planner

fn luminance(hex: &str) -> f64 {
    let c = Rgba::parse_hex(hex).expect("valid color");
    let lin = |v: u8| {
        let s = v as f64 / 255.0;
        if s <= 0.04045 {
            s / 12.92
        } else {
            ((s + 0.055) / 1.055).powf(2.4)
        }
    };
    let [r, g, b, _] = c.0;
    0.2126 * lin(r) + 0.7152 * lin(g) + 0.0722 * lin(b)
}

fn spec_ok(s: &TypographySpec, w: u32, h: u32) -> Result<(), String> {
    let hex = s.color.len() == 7
        && s.color.starts_with('#')
        && s.color[1..].chars().all(|c| c.is_ascii_hexdigit());
    let ok = s.box_width > 0
        && s.box_height > 0
        && s.x >= 0
        && s.y >= 0
        && s.x + s.box_width <= w as i64
        && s.y + s.box_height <= h as i64
        && s.font_size > 0.0
        && s.font_size <= s.box_height as f64
        && (-180.0..180.0).contains(&s.rotation_deg)
        && !s.font_id.is_empty()
        && hex;
    check(ok, || format!("invalid spec {s:?} on {w}x{h}"))
}

fn boxes_touch(a: &TypographySpec, b: &TypographySpec) -> bool {
    let (ax1, ay1) = (a.x + a.box_width, a.y + a.box_height);
    let (bx1, by1) = (b.x + b.box_width, b.y + b.box_height);
    a.x <= bx1 && b.x <= ax1 && a.y <= by1 && b.y <= ay1
}

fn random_plan_request(rng: &mut ChaCha8Rng) -> (PlanRequest, Option<f64>) {
    let width = rng.random_range(256..=2048);
    let height = rng.random_range(256..=2048);
    let n = rng.random_range(1..=5);
    let mut items = Vec::new();
    let mut fixed_boxes = 0;
    for k in 0..n {
        let role = match (k, rng.random_range(0..3)) {
            (0, 0) => Role::Title,
            (_, 1) => Role::Subtitle,
            _ => Role::Information,
        };
        let words = rng.random_range(1..=6);
        let content = (0..words)
            .map(|_| *VOCAB.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ");
        let mut c = UserConstraints::default();
        if fixed_boxes == 0 && rng.random_bool(0.15) {
            let bw = rng.random_range(20..=width as i64 / 3);
            let bh = rng.random_range(20..=height as i64 / 8);
            c.fixed_box = Some(FixedBox {
                x: rng.random_range(0..=width as i64 - bw),
                y: rng.random_range(0..=height as i64 - bh),
                width: bw,
                height: bh,
            });
            fixed_boxes += 1;
        }
        if rng.random_bool(0.2) {
            c.color = Some(format!("#{:06X}", rng.random_range(0..0x1000000u32)));
        }
        if rng.random_bool(0.2) {
            c.rotation_deg = Some(rng.random_range(-180..180) as f64);
        }
        if rng.random_bool(0.2) {
            c.alignment = Some(*[Alignment::Left, Alignment::Center, Alignment::Right].choose(rng).unwrap());
        }
        if rng.random_bool(0.2) {
            c.font_id = Some(["sans", "mono-test"].choose(rng).unwrap().to_string());
        }
        if rng.random_bool(0.2) {
            let cap = c.fixed_box.map_or(height as f64 / 10.0, |b| b.height as f64);
            c.font_size = Some((rng.random_range(0.3..1.0) * cap).max(6.0).min(cap).round().max(1.0));
        }
        items.push(PlanItem {
            role,
            content,
            constraints: c,
        });
    }
    let (descriptor, uniform) = if rng.random_bool(0.5) {
        let l = rng.random_range(0.0..=1.0);
        (BackgroundDescriptor::uniform(l), Some(l))
    } else {
        let grid = (0..8)
            .map(|_| (0..8).map(|_| rng.random_range(0.0..=1.0)).collect())
            .collect();
        (
            BackgroundDescriptor::Stats {
                luminance_grid: grid,
                dominant_colors: vec![],
            },
            None,
        )
    };
    (
        PlanRequest {
            canvas: Canvas { width, height },
            background_descriptor: descriptor,
            items,
            style_hint: None,
        },
        uniform,
    )
}

fn fixed_verbatim(c: &UserConstraints, s: &TypographySpec) -> bool {
    c.fixed_box.is_none_or(|b| {
        (s.x, s.y, s.box_width, s.box_height) == (b.x, b.y, b.width, b.height)
    }) && c.alignment.is_none_or(|a| a == s.alignment)
        && c.font_id.as_ref().is_none_or(|f| *f == s.font_id)
        && c.font_size.is_none_or(|f| f == s.font_size)
        && c.color.as_ref().is_none_or(|col| *col == s.color)
        && c.rotation_deg.is_none_or(|r| r == s.rotation_deg)
}

fn planner() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let registry = FontRegistry::builtin();
    let mut contrast_checks = 0;
    let mut fixed_checks = 0;
    for i in 0..1000 {
        let (req, uniform) = random_plan_request(&mut rng);
        let (w, h) = (req.canvas.width, req.canvas.height);
        let plan = plan_rule_based(&req, &registry).map_err(|e| format!("request {i}: {e}"))?;
        check(plan.items.len() == req.items.len(), || format!("request {i}: item count"))?;
        for (item, p) in req.items.iter().zip(&plan.items) {
            spec_ok(&p.spec, w, h).map_err(|e| format!("request {i}: {e}"))?;
            if !item.constraints.is_empty() {
                fixed_checks += 1;
            }
            check(fixed_verbatim(&item.constraints, &p.spec), || {
                format!("request {i}: fixed attributes changed: {:?} -> {:?}", item.constraints, p.spec)
            })?;
            if let (Some(l), None) = (uniform, &item.constraints.color) {
                let d = (luminance(&p.spec.color) - l).abs();
                contrast_checks += 1;
                check(d >= 0.4, || format!("request {i}: contrast {d:.3} on L={l:.3}"))?;
            }
        }
        let free: Vec<&TypographySpec> = req
            .items
            .iter()
            .zip(&plan.items)
            .filter(|(it, _)| it.constraints.fixed_box.is_none())
            .map(|(_, p)| &p.spec)
            .collect();
        for a in 0..free.len() {
            for b in a + 1..free.len() {
                check(!boxes_touch(free[a], free[b]), || {
                    format!("request {i}: overlap {:?} / {:?}", free[a], free[b])
                })?;
            }
        }
    }
    Ok(format!(
        "1000 plans valid; {fixed_checks} constrained items verbatim; {contrast_checks} contrast checks"
    ))
}

// -------------------------------------------------------------------- metric

fn brute_force_prf(detected: &[String], specified: &[String]) -> (f64, f64) {
    let mut used = vec![false; specified.len()];
    let mut matched = 0usize;
    for d in detected {
        if let Some(j) = (0..specified.len()).find(|&j| !used[j] && specified[j] == *d) {
            used[j] = true;
            matched += 1;
        }
    }
    let p = if detected.is_empty() { 1.0 } else { matched as f64 / detected.len() as f64 };
    let r = if specified.is_empty() { 1.0 } else { matched as f64 / specified.len() as f64 };
    (p, r)
}

fn metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let alphabet = ["a", "b", "c", "d", "é", "ß"];
    for i in 0..500 {
        let list = |rng: &mut ChaCha8Rng| -> Vec<String> {
            let n = rng.random_range(0..=12);
            (0..n)
                .map(|_| {
                    let len = rng.random_range(1..=2);
                    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
                })
                .collect()
        };
        let detected = list(&mut rng);
        let specified = list(&mut rng);
        let dm: WordMultiset = detected.iter().cloned().collect();
        let sm: WordMultiset = specified.iter().cloned().collect();
        let r = word_prf(&dm, &sm);
        let (p, rc) = brute_force_prf(&detected, &specified);
        check(r.precision == p && r.recall == rc, || {
            format!("pair {i}: got ({}, {}), oracle ({p}, {rc})", r.precision, r.recall)
        })?;
    }
    Ok("500 pairs match the brute-force oracle exactly".into())
}

// ------------------------------------------------------------------- dataset

fn base_record(i: usize) -> Value {
    json!({
        "background_ref": "bg.png",
        "user_description": format!("poster number {i}"),
        "elements": [
            {"role": "title", "content": format!("Title {i}"), "x": 10, "y": 10,
             "box_width": 180, "box_height": 40, "font_id": "sans", "font_size": 32.0,
             "color": "#FFFFFF", "alignment": "center", "rotation_deg": 0.0},
            {"role": "information", "content": "Friday", "x": 10, "y": 200,
             "box_width": 100, "box_height": 20, "font_id": "sans", "font_size": 14.0,
             "color": "#101010", "alignment": "left", "rotation_deg": (i as f64) - 5.0}
        ]
    })
}

fn dataset() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    RasterImage::filled(200, 260, [30, 30, 30, 255])
        .save(&dir.path().join("bg.png"))
        .map_err(|e| e.to_string())?;
    type Fault = (&'static str, fn(&mut Value));
    let faults: [Fault; 10] = [
        ("empty_description", |r| r["user_description"] = json!(" ")),
        ("background_unreadable", |r| r["background_ref"] = json!("missing.png")),
        ("unknown_role", |r| r["elements"][0]["role"] = json!("caption")),
        ("empty_content", |r| r["elements"][1]["content"] = json!("")),
        ("box_out_of_bounds", |r| r["elements"][0]["x"] = json!(100)),
        ("nonpositive_box", |r| r["elements"][1]["box_width"] = json!(0)),
        ("font_size_exceeds_box", |r| r["elements"][0]["font_size"] = json!(41.0)),
        ("bad_color", |r| r["elements"][1]["color"] = json!("#12345")),
        ("bad_rotation", |r| r["elements"][1]["rotation_deg"] = json!(180.0)),
        ("multiple_titles", |r| r["elements"][1]["role"] = json!("title")),
    ];
    let mut files = Vec::new();
    for (k, (rule, inject)) in faults.iter().enumerate() {
        let mut r = base_record(k);
        inject(&mut r);
        let f = format!("fault-{k}-{rule}.json");
        std::fs::write(dir.path().join(&f), r.to_string()).unwrap();
        files.push(f);
    }
    for k in 0..10 {
        let f = format!("valid-{k}.json");
        std::fs::write(dir.path().join(&f), base_record(k).to_string()).unwrap();
        files.push(f);
    }
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, json!({"kind": "design", "records": files}).to_string()).unwrap();
    let corpus = Corpus::load(&manifest).map_err(|e| e.to_string())?;
    check(corpus.manifest.kind == RecordKind::Design, || "kind".into())?;
    let diags = corpus.validate();
    for (k, (rule, _)) in faults.iter().enumerate() {
        let prefix = format!("fault-{k}-{rule}.json");
        check(
            diags.iter().any(|d| d.path.starts_with(&prefix) && d.rule == *rule),
            || format!("fault {rule} not caught"),
        )?;
    }
    check(!diags.iter().any(|d| d.path.starts_with("valid-")), || {
        "valid record flagged".into()
    })?;

    let records: Vec<(String, Value)> = corpus
        .records
        .iter()
        .map(|r| (r.file.clone(), r.value.clone().unwrap()))
        .collect();
    let out = export_finetune(&records, &corpus.assets(), TEMPLATE_PLANNER_V1)
        .map_err(|e| e.to_string())?;
    check(out.exported == 10 && out.excluded == 10, || {
        format!("exported {} excluded {}", out.exported, out.excluded)
    })?;
    for line in out.jsonl.lines() {
        let pair: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let resp = pair["response"].as_str().ok_or("response is not a string")?;
        let parsed = parse_plan_response(resp)?;
        check(parsed.items.len() == 2, || "item count".into())?;
    }
    Ok("10/10 seeded faults caught; 10 exported responses parse".into())
}

// ---------------------------------------------------------------- resilience

fn resilience() -> Outcome {
    let mock = MockServer::start().map_err(|e| e.to_string())?;
    let kind = BackendKind::Background;
    let mut cases = 0;
    for retries in 0..=3u32 {
        let ep = mock.endpoint(kind).with_retries(retries);
        for k in 0..=retries as usize {
            for status in [503u16, 500, 408, 429] {
                mock.reset_counts();
                mock.fail_next(kind, k, status);
                generate_background("p", (64, 64), 1, Some(&ep), None)
                    .map_err(|e| format!("retries {retries}, {k} x {status}: {e}"))?;
                check(mock.count(kind) == k + 1, || {
                    format!("retries {retries}, {k} failures: {} attempts", mock.count(kind))
                })?;
                cases += 1;
            }
        }
        mock.reset_counts();
        mock.fail_next(kind, retries as usize + 1, 503);
        match generate_background("p", (64, 64), 1, Some(&ep), None) {
            Err(BackendError::Unavailable { attempts, .. }) if attempts == retries + 1 => {}
            other => return Err(format!("retries {retries}: expected Unavailable, got {other:?}")),
        }
        check(mock.count(kind) == retries as usize + 1, || "attempt count".into())?;
        mock.clear(kind);
        cases += 1;
    }
    mock.reset_counts();
    mock.fail_next(kind, 1, 400);
    let ep = mock.endpoint(kind).with_retries(3);
    check(generate_background("p", (64, 64), 1, Some(&ep), None).is_err(), || "400 succeeded".into())?;
    check(mock.count(kind) == 1, || "400 was retried".into())?;
    mock.clear(kind);

    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for i in 0..30 {
        let (w, h) = (rng.random_range(8..=48), rng.random_range(8..=48));
        let image = random_image(&mut rng, w, h);
        let mut mask = random_mask(&mut rng, w, h);
        for y in 0..h {
            for x in 0..w {
                if rng.random_bool(0.5) {
                    mask.set(x, y, 0.0);
                }
            }
        }
        let out = stylize_local(&StylizeRequest {
            image: image.clone(),
            mask: mask.clone(),
            prompt: format!("style {i}"),
            seed: i,
        });
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) == 0.0 {
                    check(out.pixel(x, y) == image.pixel(x, y), || {
                        format!("case {i}: mask-zero pixel ({x}, {y}) changed")
                    })?;
                }
            }
        }
    }
    Ok(format!("{cases} retry scenarios; 400 not retried; 30 stylize cases leave mask-zero pixels unchanged"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exact text on 24 synthetic posters", exact_text),
        ("blend endpoint exactness", blend_endpoints),
        ("gaussian feather against 2-D oracle", feather),
        ("end-to-end determinism", determinism),
        ("planner validity on 1000 requests", planner),
        ("word precision/recall against oracle", metric),
        ("dataset fault corpus and export", dataset),
        ("backend retries and stylize fallback", resilience),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let r = f();
        match &r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
