use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::svg::{self, Point};
use super::RunArtifacts;
use crate::corpus::write_jsonl;
use crate::graph::{export_dot, export_graphml};
use crate::project::ProjectionMethod;
use crate::{numfmt, Error, Result};

pub const TOPIC_NOTE: &str = "note: topic numbers are arbitrary labels; compare runs by content, not by index";

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    files.push(name.to_string());
    Ok(())
}

fn csv_buffer(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::io("<buffer>", e))?;
    Ok(buf)
}

fn projection_params(art: &RunArtifacts) -> String {
    let p = &art.projection;
    match p.method {
        ProjectionMethod::Pca => {
            let ev: Vec<String> = p.explained_variance.iter().map(|v| numfmt::g12(*v)).collect();
            format!("method=pca explained_variance={}", ev.join(";"))
        }
        ProjectionMethod::Tsne => {
            let t = art.config.tsne();
            format!(
                "method=tsne perplexity={} iterations={} learning_rate={} early_exaggeration={} \
                 exaggeration_iters={} momentum={} final_momentum={} momentum_switch={} seed={} kl_final={}",
                numfmt::g12(t.perplexity),
                t.iterations,
                numfmt::g12(t.learning_rate),
                numfmt::g12(t.early_exaggeration),
                t.exaggeration_iters,
                numfmt::g12(t.momentum),
                numfmt::g12(t.final_momentum),
                t.momentum_switch,
                t.seed,
                numfmt::g12(p.kl_final.unwrap_or(f64::NAN))
            )
        }
    }
}

/// Human-readable digest of a run.
pub fn summary_text(art: &RunArtifacts) -> String {
    let c = &art.config;
    let mut s = String::new();
    writeln!(s, "model: {} k={} seed={}", c.model.kind.as_str(), c.model.k, c.model_seed()).unwrap();
    writeln!(s, "segmentation: {}  exclusions: {}", c.segment.mode, c.exclusions.policy.as_str()).unwrap();
    writeln!(
        s,
        "corpus: {} documents, {} terms, {} tokens",
        art.documents.len(),
        art.counts.n_terms(),
        art.counts.total()
    )
    .unwrap();
    for (k, v) in &art.stats {
        if !k.starts_with("corpus.") {
            writeln!(s, "{k}: {}", numfmt::g12(*v)).unwrap();
        }
    }
    writeln!(s, "\n{TOPIC_NOTE}").unwrap();
    let sizes = art.assignment.sizes(c.model.k);
    for (t, terms) in art.top_terms.iter().enumerate() {
        let words: Vec<&str> = terms.iter().take(10).map(|t| t.term.as_str()).collect();
        writeln!(s, "topic {t} ({} docs): {}", sizes[t], words.join(" ")).unwrap();
    }
    if let Some(m) = &art.mca {
        writeln!(s, "\nMCA nearest category points:").unwrap();
        for (i, label) in m.columns.iter().enumerate() {
            let near: Vec<String> = m.neighbors(i).iter().take(3).map(|n| n.label.name()).collect();
            writeln!(s, "  {}: {}", label.name(), near.join(", ")).unwrap();
        }
    }
    s
}

/// Writes every report into `dir`; returns the relative paths written, in
/// sorted order.
pub fn emit_reports(art: &RunArtifacts, dir: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let cats = &art.categories;
    let (hand, lang, subj, quire) = (
        cats.variable_index("hand")?,
        cats.variable_index("language")?,
        cats.variable_index("subject")?,
        cats.variable_index("quire")?,
    );

    write_file(dir, "config.toml", art.config.to_toml()?.as_bytes(), &mut files)?;

    let mut tokens = Vec::new();
    write_jsonl(&art.documents, &mut tokens)?;
    write_file(dir, "tokens.jsonl", &tokens, &mut files)?;

    let mut model = art.model.to_json()?;
    model.push('\n');
    write_file(dir, "model.json", model.as_bytes(), &mut files)?;

    let top = csv_buffer(|w| {
        writeln!(w, "topic,rank,term,weight")?;
        for (t, terms) in art.top_terms.iter().enumerate() {
            for (r, term) in terms.iter().enumerate() {
                writeln!(w, "{t},{},{},{}", r + 1, term.term, numfmt::g12(term.weight))?;
            }
        }
        Ok(())
    })?;
    write_file(dir, "top_terms.csv", &top, &mut files)?;

    let assignments = csv_buffer(|w| {
        writeln!(w, "doc_id,page,topic,hand,language,subject,quire")?;
        for ((doc, &topic), row) in art.documents.iter().zip(&art.assignment.topics).zip(&cats.values) {
            writeln!(
                w,
                "{},{},{topic},{},{},{},{}",
                doc.id, doc.page, row[hand], row[lang], row[subj], row[quire]
            )?;
        }
        Ok(())
    })?;
    write_file(dir, "assignments.csv", &assignments, &mut files)?;

    let params = projection_params(art);
    let coords = &art.projection.coords;
    let y_of = |i: usize| if coords.cols() > 1 { coords.get(i, 1) } else { 0.0 };
    let projection = csv_buffer(|w| {
        writeln!(w, "# {params}")?;
        writeln!(w, "doc_id,x,y,assigned_topic,hand,language,subject")?;
        for (i, (doc, row)) in art.documents.iter().zip(&cats.values).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                doc.id,
                numfmt::g12(coords.get(i, 0)),
                numfmt::g12(y_of(i)),
                art.assignment.topics[i],
                row[hand],
                row[lang],
                row[subj]
            )?;
        }
        Ok(())
    })?;
    write_file(dir, "projection.csv", &projection, &mut files)?;

    let points: Vec<Point> = (0..art.documents.len())
        .map(|i| Point {
            x: coords.get(i, 0),
            y: y_of(i),
            group: art.assignment.topics[i],
            label: None,
        })
        .collect();
    let legend: Vec<String> = (0..art.config.model.k).map(|t| format!("topic {t}")).collect();
    let title = format!(
        "{} k={}: documents by assigned topic",
        art.config.model.kind.as_str().to_uppercase(),
        art.config.model.k
    );
    let svg = svg::scatter(&points, &legend, &title, &params);
    write_file(dir, "projection.svg", svg.as_bytes(), &mut files)?;

    if let Some(m) = &art.mca {
        let benzecri = art.config.mca.benzecri;
        let neighbors = art.config.mca.neighbors;
        write_file(dir, "category_coords.csv", &csv_buffer(|w| m.write_category_csv(w))?, &mut files)?;
        write_file(dir, "row_coords.csv", &csv_buffer(|w| m.write_row_csv(w))?, &mut files)?;
        write_file(dir, "inertia.csv", &csv_buffer(|w| m.write_inertia_csv(w, benzecri))?, &mut files)?;
        write_file(dir, "neighbors.csv", &csv_buffer(|w| m.write_neighbors_csv(w, neighbors))?, &mut files)?;

        let vars: Vec<String> = {
            let mut v: Vec<String> = Vec::new();
            for c in &m.columns {
                if !v.contains(&c.variable) {
                    v.push(c.variable.clone());
                }
            }
            v
        };
        let names: Vec<String> = m.columns.iter().map(|c| c.name()).collect();
        let cc = &m.category_coords;
        let points: Vec<Point> = m
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| Point {
                x: cc.get(i, 0),
                y: if cc.cols() > 1 { cc.get(i, 1) } else { 0.0 },
                group: vars.iter().position(|v| *v == c.variable).expect("collected above"),
                label: Some(names[i].as_str()),
            })
            .collect();
        let inertia: Vec<String> = m.principal_inertias.iter().take(m.dims()).map(|l| numfmt::g12(*l)).collect();
        let svg = svg::scatter(
            &points,
            &vars,
            "MCA category map",
            &format!("principal inertias {}; total {}", inertia.join(";"), numfmt::g12(m.total_inertia)),
        );
        write_file(dir, "mca.svg", svg.as_bytes(), &mut files)?;
    }

    for g in &art.graphs {
        let stem = g.file_stem();
        write_file(dir, &format!("graphs/{stem}.dot"), export_dot(g).as_bytes(), &mut files)?;
        write_file(dir, &format!("graphs/{stem}.graphml"), export_graphml(g).as_bytes(), &mut files)?;
    }

    write_file(dir, "summary.txt", summary_text(art).as_bytes(), &mut files)?;
    files.sort();
    Ok(files)
}
