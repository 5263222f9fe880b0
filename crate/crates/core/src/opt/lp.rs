use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::configs::{enumerate_configs, SlotConfig};
use crate::error::Result;
use crate::scenario::Scenario;

const TERMS_PER_LINE: usize = 6;

fn var(c: &SlotConfig, index: usize) -> String {
    format!("x_f{}_s{}_c{}", c.frame + 1, c.slot + 1, index)
}

fn push_terms(out: &mut String, terms: &[String]) {
    for (k, term) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        if k > 0 {
            out.push_str(" + ");
        }
        out.push_str(term);
    }
}

/// Renders the configuration-based packing model in LP file format: one
/// binary per (resource block, configuration), at most one configuration
/// per resource block, at most one serving configuration per device and
/// frame, and one energy row per device.
pub fn write_ilp(scenario: &Scenario, config_cap: usize) -> Result<String> {
    let cfg = &scenario.config;
    let mut vars: Vec<(String, SlotConfig)> = Vec::new();
    for t in 0..cfg.num_frames {
        for slot in enumerate_configs(scenario, t, config_cap)? {
            for (k, c) in slot.into_iter().enumerate() {
                vars.push((var(&c, k + 1), c));
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ offline NOMA grouping and power allocation: {} devices, {} slots, {} frames, G = {}",
        cfg.num_devices, cfg.num_slots, cfg.num_frames, cfg.group_cap
    );
    out.push_str("Maximize\n obj: ");
    if vars.is_empty() {
        out.push('0');
    } else {
        let terms: Vec<String> = vars.iter().map(|(v, c)| format!("{} {v}", c.value())).collect();
        push_terms(&mut out, &terms);
    }
    out.push_str("\nSubject To\n");

    for t in 0..cfg.num_frames {
        for j in 0..cfg.num_slots {
            let terms: Vec<String> = vars
                .iter()
                .filter(|(_, c)| c.frame == t && c.slot == j)
                .map(|(v, _)| v.clone())
                .collect();
            if terms.is_empty() {
                continue;
            }
            let _ = write!(out, " rb_f{}_s{}: ", t + 1, j + 1);
            push_terms(&mut out, &terms);
            out.push_str(" <= 1\n");
        }
    }
    for t in 0..cfg.num_frames {
        for d in 0..cfg.num_devices {
            let terms: Vec<String> = vars
                .iter()
                .filter(|(_, c)| c.frame == t && c.contains(d))
                .map(|(v, _)| v.clone())
                .collect();
            if terms.len() < 2 {
                continue;
            }
            let _ = write!(out, " serve_d{}_f{}: ", d + 1, t + 1);
            push_terms(&mut out, &terms);
            out.push_str(" <= 1\n");
        }
    }
    for d in 0..cfg.num_devices {
        let terms: Vec<String> = vars
            .iter()
            .filter_map(|(v, c)| {
                c.members
                    .iter()
                    .find(|&&(dev, _)| dev == d)
                    .map(|&(_, level)| format!("{:.6} {v}", cfg.level_mw(level)))
            })
            .collect();
        if terms.is_empty() {
            continue;
        }
        let _ = write!(out, " energy_d{}: ", d + 1);
        push_terms(&mut out, &terms);
        let _ = writeln!(out, " <= {:.6}", cfg.energy_budget_mw);
    }

    if !vars.is_empty() {
        out.push_str("Binary\n");
        for chunk in vars.chunks(TERMS_PER_LINE) {
            let names: Vec<&str> = chunk.iter().map(|(v, _)| v.as_str()).collect();
            let _ = writeln!(out, " {}", names.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}

/// Writes [`write_ilp`] output to `path`.
pub fn export_ilp(scenario: &Scenario, config_cap: usize, path: impl AsRef<Path>) -> Result<()> {
    let text = write_ilp(scenario, config_cap)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
