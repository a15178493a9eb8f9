use std::path::PathBuf;

use bitslice_core::reramsim::{
    activation_planes, bitline_profile, map_model_with_tile, overhead_report,
    reference_resolutions, summarize, GroupOverhead, MappingSummary, OverheadReport,
};
use bitslice_core::slicekit::bit_slice;
use bitslice_core::trainkit::{load_mnist, Checkpoint};
use serde::Serialize;

use crate::config::{switch, text, Defaults, RunConfig};
use crate::error::{CliError, Result};
use crate::{AdcArgs, MapAdcArgs, MapArgs};

const MAP_DEFAULTS: Defaults = &[
    ("checkpoint", ""),
    ("tile_size", "128"),
    ("inputs", ""),
    ("samples", "100"),
    ("json", "false"),
    ("out", ""),
];

const MAP_ADC_DEFAULTS: Defaults = &[
    ("checkpoint", ""),
    ("tile_size", "128"),
    ("inputs", ""),
    ("samples", "100"),
    ("baseline", "8"),
    ("json", "false"),
    ("out", ""),
];

const ADC_DEFAULTS: Defaults = &[
    ("resolutions", "1,3,3,3"),
    ("baseline", "8"),
    ("json", "false"),
    ("out", ""),
];

fn path_text(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn map_flags(a: &MapArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("checkpoint", path_text(&a.checkpoint)),
        ("tile_size", text(&a.tile_size)),
        ("inputs", path_text(&a.inputs)),
        ("samples", text(&a.samples)),
        ("json", switch(a.json)),
        ("out", path_text(&a.out)),
    ]
}

fn mapping_summary(rc: &RunConfig) -> Result<MappingSummary> {
    let path: PathBuf = rc.get("checkpoint")?;
    let ck = Checkpoint::<f32>::load(&path)?;
    let quant = ck.header.config.quant;
    let qm = ck.model.quantized_view(quant)?;
    let sliced: Vec<_> = qm.quantized_layers().iter().map(bit_slice).collect();
    let mapping = map_model_with_tile(&sliced, rc.get("tile_size")?)?;
    let profile = match rc.opt::<PathBuf>("inputs")? {
        Some(dir) => {
            let samples: usize = rc.get("samples")?;
            let data = load_mnist::<f32>(&dir)?;
            let images = data.test.head(samples).images;
            let planes = activation_planes(&qm, &images, quant.bits())?;
            bitline_profile(&mapping, Some(&planes))?
        }
        None => bitline_profile(&mapping, None)?,
    };
    Ok(summarize(&mapping, &profile))
}

fn render_mapping(s: &MappingSummary) -> String {
    let mut out = format!(
        "tile {0}x{0}, {1} inputs\n",
        s.tile_size,
        if s.empirical {
            "empirical"
        } else {
            "all-ones (worst case)"
        }
    );
    out.push_str("Group  Tiles+  Tiles-  Nonzero  MaxAcc  Required  Target\n");
    for g in &s.groups {
        out.push_str(&format!(
            "XB{:<4} {:>6}  {:>6}  {:>6.2}%  {:>6}  {:>7}b  {:>5}b\n",
            g.group,
            g.tile_count_pos,
            g.tile_count_neg,
            100.0 * g.nonzero_cell_fraction,
            g.max_accumulation,
            g.required_bits,
            g.target_bits
        ));
    }
    out
}

fn render_overhead(
    title: &str,
    baseline: u32,
    rows: &[(usize, u32, Option<GroupOverhead>)],
) -> String {
    let mut out = format!("{title} (baseline {baseline}-bit)\n");
    out.push_str("Group  ADC   Energy   Speedup  Area\n");
    for (group, n, row) in rows {
        match row {
            Some(r) => out.push_str(&format!(
                "XB{:<4} {:>2}b  {:>7}  {:>7}  {:>5}\n",
                group,
                n,
                r.energy_label(),
                r.speedup_label(),
                r.area_label()
            )),
            None => out.push_str(&format!("XB{group:<4} {n:>2}b  exceeds baseline\n")),
        }
    }
    out
}

fn write_out(rc: &RunConfig, name: &str, json: &str) -> Result<()> {
    if let Some(out) = rc.opt::<PathBuf>("out")? {
        rc.echo_into(&out)?;
        let path = out.join(name);
        std::fs::write(&path, json).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn emit(rc: &RunConfig, name: &str, json: String, table: String) -> Result<()> {
    write_out(rc, name, &json)?;
    if rc.flag("json")? {
        print!("{json}");
    } else {
        print!("{table}");
    }
    Ok(())
}

pub fn map(a: MapArgs) -> Result<()> {
    let rc = RunConfig::resolve(MAP_DEFAULTS, a.config.as_deref(), map_flags(&a))?;
    let s = mapping_summary(&rc)?;
    let json = serde_json::to_string_pretty(&s).expect("serializes") + "\n";
    emit(&rc, "mapping.json", json, render_mapping(&s))
}

fn overhead_rows(report: &OverheadReport) -> Vec<(usize, u32, Option<GroupOverhead>)> {
    report
        .rows
        .iter()
        .map(|r| (r.group, r.resolution, Some(r.clone())))
        .collect()
}

pub fn adc(a: AdcArgs) -> Result<()> {
    let rc = RunConfig::resolve(
        ADC_DEFAULTS,
        a.config.as_deref(),
        vec![
            ("resolutions", a.resolutions.clone()),
            ("baseline", text(&a.baseline)),
            ("json", switch(a.json)),
            ("out", path_text(&a.out)),
        ],
    )?;
    let mut res: Vec<u32> = rc.list("resolutions")?;
    if res.is_empty() {
        return Err(CliError::usage("resolutions must list at least one group"));
    }
    res.reverse();
    let baseline = rc.get("baseline")?;
    let report = overhead_report(&res, baseline)?;
    let json = serde_json::to_string_pretty(&report).expect("serializes") + "\n";
    let table = render_overhead("ADC overhead saving", baseline, &overhead_rows(&report));
    emit(&rc, "adc.json", json, table)
}

#[derive(Serialize)]
struct MapAdcJson {
    mapping: MappingSummary,
    /// Savings at the computed resolution; null where it exceeds the baseline.
    required: Vec<Option<GroupOverhead>>,
    target: OverheadReport,
}

pub fn map_adc(a: MapAdcArgs) -> Result<()> {
    let mut flags = map_flags(&a.map);
    flags.push(("baseline", text(&a.baseline)));
    let rc = RunConfig::resolve(MAP_ADC_DEFAULTS, a.map.config.as_deref(), flags)?;
    let baseline: u32 = rc.get("baseline")?;
    let s = mapping_summary(&rc)?;
    let required: Vec<(usize, u32, Option<GroupOverhead>)> = s
        .groups
        .iter()
        .map(|g| {
            let row = (g.required_bits <= baseline)
                .then(|| overhead_report(&[g.required_bits], baseline))
                .transpose()
                .map(|r| {
                    r.map(|r| GroupOverhead {
                        group: g.group,
                        ..r.rows[0].clone()
                    })
                });
            row.map(|row| (g.group, g.required_bits, row))
        })
        .collect::<std::result::Result<_, _>>()?;
    let target = overhead_report(&reference_resolutions(s.groups.len()), baseline)?;

    let mut table = render_mapping(&s);
    table.push('\n');
    table.push_str(&render_overhead(
        "ADC saving at required resolution",
        baseline,
        &required,
    ));
    table.push('\n');
    table.push_str(&render_overhead(
        "ADC saving at target resolution",
        baseline,
        &overhead_rows(&target),
    ));
    let body = MapAdcJson {
        mapping: s,
        required: required.into_iter().map(|(_, _, r)| r).collect(),
        target,
    };
    let json = serde_json::to_string_pretty(&body).expect("serializes") + "\n";
    emit(&rc, "map-adc.json", json, table)
}
