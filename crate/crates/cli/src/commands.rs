//! One function per subcommand. Each returns the text for standard output
//! and writes its files under the configured output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use hurricat::corpus::{
    filter_tweets, label_tweets, merge_category, open_path, parse_corpus, read_labeled,
    read_place_table, write_corpus, write_labeled, write_place_table, CorpusFormat,
};
use hurricat::eval::{
    cross_validate, random_label_baseline, CvOptions, FeatureSpec, MetricsReport, MetricsSet,
};
use hurricat::features::{load_embeddings, FeatureMethod};
use hurricat::geolabel::{build_place_table, read_places, read_track};
use hurricat::locpredict::predict_location;
use hurricat::text::{read_blocklist, strip_area_terms, tokenize};
use hurricat::{
    Algorithm, CategoryLabel, Dataset, EmbeddingTable, FeatureExtractor, FilterSpec, LabeledTweet,
    PlaceTable, TrainConfig, TrainedModel, Tweet,
};

use crate::config::RunConfig;
use crate::output::{fmt6, tsv, write_file, OutDir, Provenance};
use crate::CliError;

const BUNDLE_MAGIC: &str = "hurricat-bundle 1";

fn require<'a, T>(value: &'a Option<T>, key: &str, command: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| {
        CliError::usage(format!(
            "{command} needs --{} (or `{key}` in the config)",
            key.replace('_', "-")
        ))
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_corpus(c: &RunConfig, command: &str) -> Result<Vec<Tweet>, CliError> {
    let path = require(&c.corpus, "corpus", command)?;
    let format = match &c.format {
        Some(f) => f.parse::<CorpusFormat>()?,
        None => CorpusFormat::from_path(path),
    };
    let parsed = parse_corpus(open_path(path)?, format)?;
    for e in &parsed.errors {
        log::warn!("{}: skipped record: {e}", path.display());
    }
    log::info!(
        "{}: {} tweets, {} malformed records",
        path.display(),
        parsed.tweets.len(),
        parsed.errors.len()
    );
    Ok(parsed.tweets)
}

/// Labeled tweets sorted by id, so downstream results ignore file order.
fn read_labeled_sorted(c: &RunConfig, command: &str) -> Result<Vec<LabeledTweet>, CliError> {
    let path = require(&c.labeled, "labeled", command)?;
    let mut data = read_labeled(open_path(path)?)?;
    if data.is_empty() {
        return Err(CliError::domain(format!(
            "{}: no labeled tweets",
            path.display()
        )));
    }
    data.sort_by(|a, b| a.tweet.id.cmp(&b.tweet.id));
    Ok(data)
}

fn blocklist(c: &RunConfig) -> Result<BTreeSet<String>, CliError> {
    match &c.blocklist {
        Some(p) => Ok(read_blocklist(open_path(p)?)?),
        None => Ok(BTreeSet::new()),
    }
}

fn embeddings(c: &RunConfig) -> Result<Option<Arc<EmbeddingTable>>, CliError> {
    let Some(path) = &c.embeddings else {
        return Ok(None);
    };
    let table = load_embeddings(std::io::BufReader::new(open_path(path)?))?;
    if table.duplicates() > 0 {
        log::warn!(
            "{}: {} duplicate tokens ignored",
            path.display(),
            table.duplicates()
        );
    }
    Ok(Some(Arc::new(table)))
}

fn feature_spec(
    c: &RunConfig,
    method: FeatureMethod,
    table: &Option<Arc<EmbeddingTable>>,
) -> Result<FeatureSpec, CliError> {
    match method {
        FeatureMethod::Bow => Ok(FeatureSpec::Bow {
            min_freq: c.min_freq,
        }),
        FeatureMethod::Embeddings => table
            .clone()
            .map(FeatureSpec::Embeddings)
            .ok_or_else(|| CliError::usage("embedding features need --embeddings PATH")),
    }
}

fn train_config(c: &RunConfig, algorithm: Algorithm, method: FeatureMethod) -> TrainConfig {
    TrainConfig {
        algorithm,
        seed: c.seed,
        hyper: c.hyper_for(method),
    }
}

fn filters(c: &RunConfig, base: FilterSpec) -> FilterSpec {
    let mut f = base.hashtags(&c.hashtags);
    if let Some(l) = &c.lang {
        f = f.lang(l);
    }
    if let Some(cc) = &c.country {
        f = f.country(cc);
    }
    f
}

fn ground_truth(c: &RunConfig) -> Result<(PlaceTable, bool), CliError> {
    match (&c.place_table, &c.track, &c.places) {
        (Some(p), None, None) => Ok((read_place_table(open_path(p)?)?, false)),
        (None, Some(t), Some(p)) => {
            let track = read_track(open_path(t)?)?;
            let places = read_places(open_path(p)?)?;
            Ok((
                build_place_table(&places, &track, c.radius_km, c.category_rule)?,
                true,
            ))
        }
        (None, None, None) => Err(CliError::usage(
            "label needs ground truth: --place-table, or --track with --places",
        )),
        _ => Err(CliError::usage(
            "give either --place-table or --track with --places, not both",
        )),
    }
}

fn place_table_text(prov: &Provenance, table: &PlaceTable) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_place_table(&mut buf, table)?;
    Ok(prov.comment_block() + &String::from_utf8(buf).expect("utf-8"))
}

pub fn cmd_label(c: &RunConfig) -> Result<String, CliError> {
    let prov = Provenance::new("label", c);
    let tweets = read_corpus(c, "label")?;
    let (table, derived) = ground_truth(c)?;
    if table.is_empty() {
        return Err(CliError::domain("place table is empty"));
    }
    let event = c.event_name();

    let tagged_spec = FilterSpec::new()
        .places(table.names())
        .hashtags(&c.hashtags);
    let tagged = filter_tweets(&tweets, &tagged_spec);
    let kept = filter_tweets(&tagged, &filters(c, tagged_spec));
    if kept.is_empty() {
        return Err(CliError::domain("0 tweets after filtering"));
    }
    let outcome = label_tweets(&kept, &table, &event)?;
    if outcome.labeled.is_empty() {
        return Err(CliError::domain(
            "0 tweets after filtering: no matched place has a category between 1 and 4",
        ));
    }

    let mut counts: BTreeMap<String, [usize; 2]> = BTreeMap::new();
    for (stage, set) in [&tagged, &kept].into_iter().enumerate() {
        for t in set {
            if let Some((name, _)) = t.place_name.as_deref().and_then(|p| table.get(p)) {
                counts.entry(name.to_string()).or_default()[stage] += 1;
            }
        }
    }
    let place_rows: Vec<Vec<String>> = table
        .iter()
        .map(|(name, cat)| {
            let [t, k] = counts.get(name).copied().unwrap_or_default();
            let label = merge_category(cat).map_or("-".to_string(), |l| l.to_string());
            vec![
                name.to_string(),
                cat.to_string(),
                label,
                t.to_string(),
                k.to_string(),
            ]
        })
        .collect();
    let mut totals = [0usize; 2];
    for t in &outcome.labeled {
        totals[t.label.index()] += 1;
    }
    let summary_rows = vec![vec![
        event.clone(),
        totals[0].to_string(),
        totals[1].to_string(),
    ]];

    let mut out = OutDir::create(&c.out)?;
    let mut labeled = prov.json_line().into_bytes();
    write_labeled(&mut labeled, &outcome.labeled)?;
    out.write("labeled.jsonl", &String::from_utf8(labeled).expect("utf-8"))?;
    let place_header = ["place", "category", "label", "tagged", "kept"];
    out.write("place_counts.tsv", &tsv(&prov, &place_header, &place_rows))?;
    out.write(
        "label_summary.tsv",
        &tsv(&prov, &["event", "12", "34"], &summary_rows),
    )?;
    if derived {
        out.write("place_table.csv", &place_table_text(&prov, &table)?)?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "{}", place_header.join("\t"));
    for r in &place_rows {
        let _ = writeln!(s, "{}", r.join("\t"));
    }
    let _ = writeln!(s, "\nevent\t12\t34");
    for r in &summary_rows {
        let _ = writeln!(s, "{}", r.join("\t"));
    }
    let _ = writeln!(
        s,
        "\n{} labeled, {} read, {} skipped",
        outcome.labeled.len(),
        tweets.len(),
        outcome.skipped
    );
    Ok(s)
}

pub fn cmd_geolabel(c: &RunConfig) -> Result<String, CliError> {
    let prov = Provenance::new("geolabel", c);
    let track = read_track(open_path(require(&c.track, "track", "geolabel")?)?)?;
    let places = read_places(open_path(require(&c.places, "places", "geolabel")?)?)?;
    let table = build_place_table(&places, &track, c.radius_km, c.category_rule)?;
    if table.is_empty() {
        log::warn!("no place lies within {} km of the track", c.radius_km);
    }
    let mut out = OutDir::create(&c.out)?;
    out.write("place_table.csv", &place_table_text(&prov, &table)?)?;
    let mut s = String::from("place\tcategory\n");
    for (name, cat) in table.iter() {
        let _ = writeln!(s, "{name}\t{cat}");
    }
    let _ = writeln!(
        s,
        "\n{} of {} places within {} km",
        table.len(),
        places.len(),
        c.radius_km
    );
    Ok(s)
}

#[derive(Serialize)]
struct Sweep<'a> {
    reports: &'a [MetricsReport],
    baseline: &'a MetricsSet,
}

pub fn cmd_cv(c: &RunConfig) -> Result<String, CliError> {
    let prov = Provenance::new("cv", c);
    let data = read_labeled_sorted(c, "cv")?;
    let table = embeddings(c)?;
    let blocklist = blocklist(c)?;
    let options = |method| -> Result<CvOptions, CliError> {
        Ok(CvOptions {
            features: feature_spec(c, method, &table)?,
            blocklist: blocklist.clone(),
            leaky_vocab: c.leaky_vocab,
        })
    };
    let mut out = OutDir::create(&c.out)?;

    if !c.sweep {
        let report = cross_validate(
            &data,
            &options(c.features)?,
            &train_config(c, c.algorithm, c.features),
            c.k,
            c.seed,
        )?;
        let rows: Vec<Vec<String>> = report
            .flat_rows()
            .into_iter()
            .map(|r| {
                vec![
                    r.fold,
                    r.algorithm,
                    r.features,
                    fmt6(r.precision),
                    fmt6(r.recall),
                    fmt6(r.f1),
                ]
            })
            .collect();
        let header = ["fold", "algorithm", "features", "precision", "recall", "f1"];
        out.write("cv_report.json", &prov.envelope("report", &report))?;
        let table = tsv(&prov, &header, &rows);
        out.write("cv_table.tsv", &table)?;
        return Ok(table
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect());
    }

    if table.is_none() {
        return Err(CliError::usage(
            "--sweep covers embedding features and needs --embeddings PATH",
        ));
    }
    let mut reports = Vec::new();
    for method in [FeatureMethod::Bow, FeatureMethod::Embeddings] {
        let opts = options(method)?;
        for alg in Algorithm::ALL {
            log::info!("cross-validating {alg} with {}", method.as_str());
            reports.push(cross_validate(
                &data,
                &opts,
                &train_config(c, alg, method),
                c.k,
                c.seed,
            )?);
        }
    }
    let labels: Vec<CategoryLabel> = data.iter().map(|t| t.label).collect();
    let baseline = random_label_baseline(&labels, c.seed);
    let mut rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let m = &r.pooled;
            vec![
                r.algorithm.clone(),
                r.features.clone(),
                fmt6(m.weighted_precision),
                fmt6(m.weighted_recall),
                fmt6(m.weighted_f1),
                fmt6(m.macro_f1),
                fmt6(m.accuracy),
            ]
        })
        .collect();
    rows.push(vec![
        "random_baseline".into(),
        "none".into(),
        fmt6(baseline.weighted_precision),
        fmt6(baseline.weighted_recall),
        fmt6(baseline.weighted_f1),
        fmt6(baseline.macro_f1),
        fmt6(baseline.accuracy),
    ]);
    let header = [
        "algorithm",
        "features",
        "precision",
        "recall",
        "f1",
        "macro_f1",
        "accuracy",
    ];
    out.write(
        "sweep_report.json",
        &prov.envelope(
            "sweep",
            &Sweep {
                reports: &reports,
                baseline: &baseline,
            },
        ),
    )?;
    let table = tsv(&prov, &header, &rows);
    out.write("sweep_table.tsv", &table)?;
    Ok(table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect())
}

/// Extractor and model in one text file.
pub fn bundle_text(extractor: &FeatureExtractor, model: &TrainedModel) -> String {
    let ex = extractor.to_text();
    format!(
        "{BUNDLE_MAGIC}\nextractor {}\n{ex}model\n{}",
        ex.lines().count(),
        model.to_text()
    )
}

pub fn parse_bundle(
    text: &str,
    table: Option<Arc<EmbeddingTable>>,
) -> Result<(FeatureExtractor, TrainedModel), CliError> {
    let bad = |reason: &str| CliError::usage(format!("model bundle: {reason}"));
    let mut lines = text.split_inclusive('\n');
    if lines.next().map(str::trim_end) != Some(BUNDLE_MAGIC) {
        return Err(bad("missing header"));
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.trim_end().strip_prefix("extractor "))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad("missing extractor length"))?;
    let ex: String = lines.by_ref().take(n).collect();
    if ex.lines().count() != n {
        return Err(bad("truncated extractor"));
    }
    if lines.next().map(str::trim_end) != Some("model") {
        return Err(bad("missing model section"));
    }
    let model_text: String = lines.collect();
    let extractor = FeatureExtractor::from_text(&ex, table)?;
    let model = TrainedModel::from_text(&model_text)?;
    if extractor.dim() != model.dim() {
        return Err(bad("extractor and model dimensions differ"));
    }
    Ok((extractor, model))
}

fn train(
    c: &RunConfig,
    table: &Option<Arc<EmbeddingTable>>,
) -> Result<(FeatureExtractor, TrainedModel), CliError> {
    let data = read_labeled_sorted(c, "predict")?;
    let spec = feature_spec(c, c.features, table)?;
    let extractor = spec.extractor(data.iter().map(|t| t.tweet.text.as_str()), &blocklist(c)?)?;
    let rows = data
        .iter()
        .map(|t| extractor.vectorize(&t.tweet.text).vector)
        .collect();
    let dataset = Dataset::new(rows, data.iter().map(|t| t.label).collect())?;
    let model = hurricat::classify::fit(&dataset, &train_config(c, c.algorithm, c.features))?;
    Ok((extractor, model))
}

pub fn cmd_predict(c: &RunConfig) -> Result<String, CliError> {
    let prov = Provenance::new("predict", c);
    let place = require(&c.place, "place", "predict")?;
    let tweets = read_corpus(c, "predict")?;
    let local = filter_tweets(&tweets, &filters(c, FilterSpec::new().place(place)));
    if local.is_empty() {
        return Err(CliError::domain(format!("0 tweets for place {place:?}")));
    }
    let table = embeddings(c)?;
    let (extractor, model) = match &c.model {
        Some(p) => parse_bundle(&read_text(p)?, table)?,
        None => train(c, &table)?,
    };
    if let Some(p) = &c.save_model {
        write_file(p, &bundle_text(&extractor, &model))?;
    }
    let prediction = predict_location(&model, &local, &extractor, place, c.truth, c.min_tweets)?;
    for w in &prediction.warnings {
        log::warn!("{w}");
    }
    let mut out = OutDir::create(&c.out)?;
    out.write("prediction.json", &prov.envelope("prediction", &prediction))?;
    Ok(serde_json::to_string_pretty(&prediction).expect("json") + "\n")
}

pub fn cmd_strip_terms(c: &RunConfig) -> Result<String, CliError> {
    let prov = Provenance::new("strip-terms", c);
    require(&c.blocklist, "blocklist", "strip-terms")?;
    let block = blocklist(c)?;
    let tweets = read_corpus(c, "strip-terms")?;
    let mut emptied = 0;
    let stripped: Vec<Tweet> = tweets
        .into_iter()
        .filter_map(|mut t| {
            t.text = strip_area_terms(&tokenize(&t.text), &block).join();
            if t.text.is_empty() {
                emptied += 1;
                None
            } else {
                Some(t)
            }
        })
        .collect();
    let mut buf = prov.json_line().into_bytes();
    write_corpus(&mut buf, &stripped)?;
    let mut out = OutDir::create(&c.out)?;
    out.write("stripped.jsonl", &String::from_utf8(buf).expect("utf-8"))?;
    Ok(format!(
        "{} tweets written, {} dropped with no remaining terms, {} terms blocked\n",
        stripped.len(),
        emptied,
        block.len()
    ))
}
