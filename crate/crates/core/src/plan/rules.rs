use super::{
    luminance_under, prose_luminance, repair_layout, BackgroundDescriptor, Canvas, LayoutItem,
    PlanError, PlanRequest, PlanResult, PlannedItem, PlannerConfig, RULE_PLANNER_ID,
};
use crate::doc::{Alignment, Role, TypographySpec};
use crate::text::{measure_text, FontRegistry, MIN_FONT_SIZE};

pub fn plan_rule_based(req: &PlanRequest, registry: &FontRegistry) -> Result<PlanResult, PlanError> {
    plan_rule_based_with(req, &PlannerConfig::default(), registry)
}

/// Deterministic layout:
///
/// * title centered, top at `title_top`, size `title_size` (of canvas height);
/// * subtitles stacked below the title with a `subtitle_gap` gap, size
///   `subtitle_ratio` of the title size;
/// * information items stacked upward so the last one ends at `info_bottom`,
///   size `info_size`;
/// * alignment center, rotation 0, color light or dark by the background
///   luminance under the box.
///
/// A line wider than the canvas minus side margins gets a smaller font so it
/// fits, never below the renderer minimum. User-fixed attributes replace the
/// planned ones and the rest is laid out around them.
pub fn plan_rule_based_with(
    req: &PlanRequest,
    config: &PlannerConfig,
    registry: &FontRegistry,
) -> Result<PlanResult, PlanError> {
    req.check(registry)?;
    let canvas = req.canvas;
    let (cw, ch) = (canvas.width as f64, canvas.height as f64);
    let mut diagnostics = Vec::new();

    if let Some(h) = &req.style_hint {
        diagnostics.push(format!("style hint {h:?} is not used by the rule-based planner"));
    }
    let luminance_grid = match &req.background_descriptor {
        BackgroundDescriptor::Stats { luminance_grid, .. } => luminance_grid.clone(),
        BackgroundDescriptor::Prose { description } => {
            let l = prose_luminance(description);
            diagnostics.push(format!(
                "prose background description read as uniform luminance {l}"
            ));
            vec![vec![l]]
        }
    };

    let margin = (config.side_margin * cw).round() as i64;
    let avail = (canvas.width as i64 - 2 * margin).max(1);

    let mut specs: Vec<Option<TypographySpec>> = vec![None; req.items.len()];
    let sized = |idx: usize, rule_size: f64, diags: &mut Vec<String>| -> TypographySpec {
        let item = &req.items[idx];
        let c = &item.constraints;
        let font_id = c.font_id.clone().unwrap_or_else(|| config.font_id.clone());
        let mut spec = TypographySpec {
            x: 0,
            y: 0,
            box_width: 1,
            box_height: 1,
            font_id,
            font_size: rule_size,
            color: config.dark_color.clone(),
            alignment: Alignment::Center,
            rotation_deg: 0.0,
        };
        c.apply_to(&mut spec);
        if let Some(b) = c.fixed_box {
            if c.font_size.is_none() {
                spec.font_size = rule_size.min(b.height as f64);
            }
        } else {
            let mut m = measure_text(registry, &item.content, &spec.font_id, spec.font_size);
            if c.font_size.is_none() && m.width > avail as f64 {
                let fitted = (spec.font_size * avail as f64 / m.width).max(MIN_FONT_SIZE);
                diags.push(format!(
                    "item {idx}: font size {:.2} reduced to {fitted:.2} to fit the canvas width",
                    spec.font_size
                ));
                spec.font_size = fitted;
                m = measure_text(registry, &item.content, &spec.font_id, spec.font_size);
            }
            spec.box_width = (m.width.ceil() as i64).clamp(1, avail);
            spec.box_height = (m.height.ceil() as i64)
                .max(spec.font_size.ceil() as i64)
                .clamp(1, canvas.height as i64);
            spec.x = (canvas.width as i64 - spec.box_width) / 2;
        }
        if let Some(hint) = &c.layout_hint {
            diags.push(format!(
                "item {idx}: layout hint {hint:?} is not used by the rule-based planner"
            ));
        }
        spec
    };

    // title
    let title_idx = req.items.iter().position(|i| i.role == Role::Title);
    let mut title_size = config.title_size * ch;
    let mut next_top = (config.title_top * ch).round() as i64;
    if let Some(t) = title_idx {
        let mut s = sized(t, title_size, &mut diagnostics);
        if req.items[t].constraints.fixed_box.is_none() {
            s.y = next_top;
        }
        title_size = s.font_size;
        next_top = s.bottom() + (config.subtitle_gap * ch).round() as i64;
        specs[t] = Some(s);
    }

    // subtitles, top-down in list order
    let sub_size = (config.subtitle_ratio * title_size).max(MIN_FONT_SIZE);
    for idx in (0..req.items.len()).filter(|&i| req.items[i].role == Role::Subtitle) {
        let mut s = sized(idx, sub_size, &mut diagnostics);
        if req.items[idx].constraints.fixed_box.is_none() {
            s.y = next_top;
        }
        next_top = s.bottom() + (config.subtitle_gap * ch).round() as i64;
        specs[idx] = Some(s);
    }

    // information, bottom-up so reading order matches list order
    let info_size = (config.info_size * ch).max(MIN_FONT_SIZE);
    let mut next_bottom = (config.info_bottom * ch).round() as i64;
    let gap = (config.info_gap * ch).round() as i64;
    for idx in (0..req.items.len())
        .rev()
        .filter(|&i| req.items[i].role == Role::Information)
    {
        let mut s = sized(idx, info_size, &mut diagnostics);
        if req.items[idx].constraints.fixed_box.is_none() {
            s.y = next_bottom - s.box_height;
            next_bottom = s.y - gap;
        }
        specs[idx] = Some(s);
    }

    let layout: Vec<LayoutItem> = req
        .items
        .iter()
        .zip(specs)
        .map(|(item, s)| LayoutItem {
            role: item.role,
            spec: s.expect("every role handled"),
            fixed: item.constraints.fixed_box.is_some(),
        })
        .collect();
    let repaired = repair_layout(&layout, canvas, registry)?;
    diagnostics.extend(repaired.diagnostics);

    let items = req
        .items
        .iter()
        .zip(repaired.specs)
        .map(|(item, mut spec)| {
            if item.constraints.color.is_none() {
                spec.color = contrast_color(&luminance_grid, canvas, &spec, config);
            }
            PlannedItem {
                role: item.role,
                content: item.content.clone(),
                spec,
                applied_constraints: item.constraints.clone(),
            }
        })
        .collect();

    Ok(PlanResult {
        items,
        planner_id: RULE_PLANNER_ID.to_string(),
        diagnostics,
    })
}

pub(crate) fn contrast_color(
    grid: &[Vec<f64>],
    canvas: Canvas,
    spec: &TypographySpec,
    config: &PlannerConfig,
) -> String {
    if luminance_under(grid, canvas, spec) < config.luminance_threshold {
        config.light_color.clone()
    } else {
        config.dark_color.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{FixedBox, PlanItem, UserConstraints};
    use super::*;

    fn request(w: u32, h: u32, lum: f64, items: Vec<PlanItem>) -> PlanRequest {
        PlanRequest {
            canvas: Canvas {
                width: w,
                height: h,
            },
            background_descriptor: BackgroundDescriptor::uniform(lum),
            items,
            style_hint: None,
        }
    }

    #[test]
    fn single_title_is_centered() {
        let reg = FontRegistry::builtin();
        let req = request(1000, 1400, 0.0, vec![PlanItem::new(Role::Title, "GALA")]);
        let r = plan_rule_based(&req, &reg).unwrap();
        let s = &r.items[0].spec;
        assert_eq!(s.font_size, 140.0);
        assert_eq!(s.x, (1000 - s.box_width) / 2);
        assert_eq!(s.y, 168);
        assert_eq!(s.color, "#F5F5F0");
        assert_eq!(s.alignment, Alignment::Center);
        assert_eq!(s.rotation_deg, 0.0);
        assert!(s.violations(1000, 1400).is_empty());
    }

    #[test]
    fn subtitle_ratio_and_gap() {
        let reg = FontRegistry::builtin();
        let req = request(
            1000,
            1400,
            0.9,
            vec![
                PlanItem::new(Role::Title, "GALA"),
                PlanItem::new(Role::Subtitle, "an evening of music"),
            ],
        );
        let r = plan_rule_based(&req, &reg).unwrap();
        let (t, s) = (&r.items[0].spec, &r.items[1].spec);
        assert!((s.font_size - 0.45 * t.font_size).abs() < 1e-9);
        assert_eq!(s.y, t.bottom() + 28);
        assert_eq!(t.color, "#1A1A1A");
    }

    #[test]
    fn information_stacks_up_from_bottom_line() {
        let reg = FontRegistry::builtin();
        let req = request(
            800,
            1000,
            0.0,
            vec![
                PlanItem::new(Role::Information, "first"),
                PlanItem::new(Role::Information, "second"),
            ],
        );
        let r = plan_rule_based(&req, &reg).unwrap();
        let (a, b) = (&r.items[0].spec, &r.items[1].spec);
        assert_eq!(b.bottom(), 880);
        assert_eq!(a.bottom(), b.y - 10);
        assert_eq!(a.font_size, 25.0);
    }

    #[test]
    fn fixed_attributes_verbatim() {
        let reg = FontRegistry::builtin();
        let fixed = UserConstraints {
            fixed_box: Some(FixedBox {
                x: 5,
                y: 100,
                width: 300,
                height: 80,
            }),
            color: Some("#FF0000".into()),
            rotation_deg: Some(-12.5),
            alignment: Some(Alignment::Left),
            ..Default::default()
        };
        let mut title = PlanItem::new(Role::Title, "GRAND OPENING");
        title.constraints = fixed.clone();
        let req = request(
            1000,
            1400,
            0.0,
            vec![title, PlanItem::new(Role::Subtitle, "saturday")],
        );
        let r = plan_rule_based(&req, &reg).unwrap();
        assert!(fixed.honored_by(&r.items[0].spec));
        assert_eq!(r.items[0].applied_constraints, fixed);
        assert!(!r.items[0].spec.overlaps(&r.items[1].spec));
    }

    #[test]
    fn long_lines_shrink_to_width() {
        let reg = FontRegistry::builtin();
        let req = request(
            400,
            600,
            0.0,
            vec![PlanItem::new(
                Role::Title,
                "an extremely long title that cannot fit on one line",
            )],
        );
        let r = plan_rule_based(&req, &reg).unwrap();
        let s = &r.items[0].spec;
        assert!(s.font_size < 60.0);
        assert!(s.box_width <= 360);
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn rejects_two_titles_and_empty() {
        let reg = FontRegistry::builtin();
        let two = request(
            400,
            600,
            0.0,
            vec![PlanItem::new(Role::Title, "a"), PlanItem::new(Role::Title, "b")],
        );
        assert!(matches!(plan_rule_based(&two, &reg), Err(PlanError::Input(_))));
        let none = request(400, 600, 0.0, vec![]);
        assert!(matches!(plan_rule_based(&none, &reg), Err(PlanError::Input(_))));
    }

    #[test]
    fn prose_descriptor_is_read() {
        let reg = FontRegistry::builtin();
        let mut req = request(400, 600, 0.0, vec![PlanItem::new(Role::Title, "a")]);
        req.background_descriptor = BackgroundDescriptor::Prose {
            description: "bright pastel sky".into(),
        };
        let r = plan_rule_based(&req, &reg).unwrap();
        assert_eq!(r.items[0].spec.color, "#1A1A1A");
        assert!(r.diagnostics.iter().any(|d| d.contains("prose")));
    }
}
