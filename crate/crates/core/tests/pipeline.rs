mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thinsection::edge::{canny, CannyParams};
use thinsection::grid::{cell_features, classify_image, make_grid, CellLabel, GridSpec, ParamSet};
use thinsection::imgcore::{decode, to_grayscale, to_working_resolution, GrayImage, RgbImage};
use thinsection::metrics::tally;
use thinsection::petro::{Rock, RockLabel};
use thinsection::sweep::{
    plan_experiment2, precision_records, run_sweep, CorpusEntry, PlanOptions, SweepReport,
};
use thinsection::synth::{generate_corpus, generate_samples};

fn reference_params(grid: u32) -> ParamSet {
    ParamSet {
        grid,
        t_nonzero: 0.01,
        t_variance: 100.0,
        canny: CannyParams::with_high(0.01),
        ..ParamSet::default()
    }
}

#[test]
fn interior_cells_match_generator_truth() {
    let counts: BTreeMap<Rock, usize> = Rock::ALL.into_iter().map(|r| (r, 5)).collect();
    for s in generate_samples(&counts, 11).unwrap() {
        let img = &s.sample.image;
        let (cells, _) =
            classify_image(img, &to_grayscale(img), &reference_params(s.sample.grid)).unwrap();
        let interior = s.sample.interior_cells();
        let hits = interior
            .iter()
            .filter(|&&i| cells.labels[i] == s.sample.truth_cells[i])
            .count();
        let rate = hits as f64 / interior.len() as f64;
        assert!(
            rate >= 0.95,
            "{}: {hits}/{} interior cells",
            s.id,
            interior.len()
        );
    }
}

#[test]
fn area_weighted_edge_fraction_is_global() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (w, h, g) in [(512, 384, 8), (100, 75, 7), (33, 31, 4)] {
        let rgb = RgbImage::new(
            w,
            h,
            (0..w * h)
                .map(|_| [rng.gen(), rng.gen(), rng.gen()])
                .collect(),
        )
        .unwrap();
        let edges = canny(&to_grayscale(&rgb), &CannyParams::default()).unwrap();
        let grid = make_grid(w, h, g).unwrap();
        let f = cell_features(&rgb, &edges, grid, Default::default()).unwrap();
        let weighted: u64 = grid
            .cells()
            .zip(&f.edge_fraction)
            .map(|(r, &e)| (e * r.area() as f64).round() as u64)
            .sum();
        assert_eq!(weighted, edges.count() as u64);
        let covered: u64 = grid.cells().map(|r| r.area()).sum();
        assert_eq!(covered, (w * h) as u64);
    }
}

#[test]
fn threshold_extremes() {
    let counts: BTreeMap<Rock, usize> = [(Rock::Granite, 1)].into();
    let s = &generate_samples(&counts, 2).unwrap()[0].sample;
    let gray = to_grayscale(&s.image);
    let no_colour = ParamSet {
        t_variance: f64::INFINITY,
        ..reference_params(16)
    };
    let (cells, _) = classify_image(&s.image, &gray, &no_colour).unwrap();
    assert!(cells.labels.iter().all(|&l| l != CellLabel::Accessory));
    let everything = ParamSet {
        t_nonzero: 1.0,
        ..no_colour
    };
    let (_, pct) = classify_image(&s.image, &gray, &everything).unwrap();
    assert_eq!(pct.quartz_fraction, 1.0);
}

#[test]
fn classification_is_repeatable() {
    let counts: BTreeMap<Rock, usize> = [(Rock::Tonalite, 1)].into();
    let s = &generate_samples(&counts, 9).unwrap()[0].sample;
    let gray = to_grayscale(&s.image);
    let a = classify_image(&s.image, &gray, &reference_params(32)).unwrap();
    let b = classify_image(&s.image, &gray, &reference_params(32)).unwrap();
    assert_eq!(a.0.to_json(), b.0.to_json());
}

#[test]
fn constant_image_has_no_edges() {
    for v in [0u8, 77, 255] {
        let img = GrayImage::filled(64, 48, v).unwrap();
        assert_eq!(canny(&img, &CannyParams::default()).unwrap().count(), 0);
    }
}

#[test]
fn canny_oracle_on_odd_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (w, h, sigma) in [(17, 9, 1.4), (40, 23, 0.8), (5, 64, 2.0), (3, 3, 1.0)] {
        let data: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
        let img = GrayImage::new(w, h, data).unwrap();
        let p = CannyParams {
            sigma,
            ..CannyParams::with_high(0.05)
        };
        let fast = canny(&img, &p).unwrap();
        let slow = common::naive_canny(&img, sigma, p.t_high, p.low_ratio);
        assert_eq!(fast.mask, slow, "{w}x{h} sigma {sigma}");
    }
}

#[test]
fn full_resolution_jpeg_capture() {
    let counts: BTreeMap<Rock, usize> = [(Rock::Granite, 1)].into();
    let s = &generate_samples(&counts, 4).unwrap()[0].sample;
    // nearest-neighbour 4x upscale, then JPEG
    let mut big = image::RgbImage::new(2048, 1536);
    for (x, y, px) in big.enumerate_pixels_mut() {
        *px = image::Rgb(s.image.get(x / 4, y / 4));
    }
    let mut bytes = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut bytes, 95)
        .encode_image(&big)
        .unwrap();
    let rgb = to_working_resolution(&decode(&bytes).unwrap()).unwrap();
    assert_eq!((rgb.width(), rgb.height()), (512, 384));
    let (_, pct) = classify_image(&rgb, &to_grayscale(&rgb), &reference_params(16)).unwrap();
    let truth = s.quartz_fraction();
    assert!(
        (pct.quartz_fraction - truth).abs() < 0.1,
        "{} vs {truth}",
        pct.quartz_fraction
    );
}

fn small_report(workers: Option<usize>) -> SweepReport {
    let dir = tempfile::tempdir().unwrap();
    let counts: BTreeMap<Rock, usize> = Rock::ALL.into_iter().map(|r| (r, 2)).collect();
    let rows = generate_corpus(&counts, 21, dir.path()).unwrap();
    let corpus = rows
        .into_iter()
        .map(|r| CorpusEntry {
            path: dir.path().join(&r.path),
            id: r.path,
            rock: r.rock.parse().unwrap(),
            section: r.section,
        })
        .collect();
    run_sweep(
        &plan_experiment2(&PlanOptions::default()).with_corpus(corpus),
        workers,
    )
    .unwrap()
}

#[test]
fn sweep_records_match_rows() {
    let report = small_report(Some(2));
    assert_eq!(report.rows.len(), 8 * 36);
    for rec in &report.records {
        let combo = report.combos.iter().position(|c| *c == rec.params).unwrap();
        let preds: Vec<(RockLabel, Rock)> = report
            .rows
            .iter()
            .filter(|r| r.combo == combo)
            .map(|r| (r.predicted(), r.truth))
            .collect();
        assert_eq!(rec.counts, tally(&preds, rec.rock));
    }
    assert_eq!(
        precision_records(&report.combos, &report.rows),
        report.records
    );
    let sorted = report
        .rows
        .windows(2)
        .all(|w| (&w[0].image, w[0].combo) < (&w[1].image, w[1].combo));
    assert!(sorted);
}

#[test]
fn sweep_independent_of_worker_count() {
    let a = small_report(Some(1)).to_csv().unwrap();
    let b = small_report(Some(8)).to_csv().unwrap();
    let c = small_report(None).to_csv().unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn report_csv_round_trip() {
    let report = small_report(None);
    let csv = report.to_csv().unwrap();
    let back = SweepReport::from_csv(&report.plan, &csv).unwrap();
    assert_eq!(back.to_csv().unwrap(), csv);
    assert_eq!(
        back.precision_csv().unwrap(),
        report.precision_csv().unwrap()
    );
    let summary = serde_json::to_string(&report.summary()).unwrap();
    assert!(summary.contains("\"generated_by\":\"thinsection "));
}

#[test]
fn grid_remainders_cover_every_pixel() {
    let g = GridSpec::new(100, 75, 8, 8).unwrap();
    let mut seen = vec![0u8; 100 * 75];
    for r in g.cells() {
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                seen[(y * 100 + x) as usize] += 1;
            }
        }
    }
    assert!(seen.iter().all(|&c| c == 1));
    let last = g.cell_rect(7, 7);
    assert_eq!((last.w, last.h), (100 - 7 * 12, 75 - 7 * 9));
}
