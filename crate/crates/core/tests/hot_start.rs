mod common;

use common::*;
use nauticle::io::deck::parse_case;
use nauticle::io::vtk::{read_vtk, Format, ResultFrame};
use nauticle::scheduler::{run, RunOptions};
use nauticle::{AssemblyOptions, Case, ErrorClass};

fn deck(fields: &[(&str, &str)], gsize: &str) -> Deck {
    let mut d = Deck::new(
        "0.5|0.5",
        "0|0",
        "4|4",
        "periodic|periodic",
        Grid::Lattice {
            gpos: "0.25|0.25".into(),
            gsize: format!("{gsize}|{gsize}"),
            gip_dist: "0.5|0.5".into(),
        },
    );
    d.variables = pairs(&[("dt", "0.1"), ("count", "0")]);
    d.fields = pairs(fields);
    d.equations = pairs(&[("count", "count=count+1"), ("grow", "u=u+rand(0,1)")]);
    d.simulated_time = "0.5".into();
    d.print_interval = "0.5".into();
    d
}

fn first_half(text: &str, dir: &std::path::Path) -> ResultFrame {
    let mut case = assemble(text, dir, 1, 4);
    let out = dir.join("first");
    let report = run(
        &mut case,
        &RunOptions {
            outdir: Some(out),
            format: Format::Binary,
            keep_frames: false,
        },
    )
    .unwrap();
    read_vtk(report.frames.last().unwrap().path.as_ref().unwrap()).unwrap()
}

fn resume(text: &str, dir: &std::path::Path, frame: ResultFrame) -> nauticle::Result<Case> {
    let doc = parse_case(text, "t", dir)?;
    Case::assemble(
        &doc,
        &AssemblyOptions {
            seed: 4,
            threads: 1,
            hot_start: Some(frame),
        },
    )
}

#[test]
fn file_state_wins() {
    let dir = tempfile::tempdir().unwrap();
    let d = deck(&[("u", "0")], "1.5");
    let frame = first_half(&d.text(), dir.path());
    assert_eq!(frame.len(), 16);
    let case = resume(&deck(&[("u", "0")], "0.5").text(), dir.path(), frame.clone()).unwrap();
    // the deck now asks for 4 particles; the file carries 16
    assert_eq!(case.particles().len(), 16);
    assert_eq!(case.clock.time, 0.5);
    assert_eq!(case.clock.step, 5);
    assert_eq!(case.clock.next_frame, frame.frame + 1);
    assert_eq!(case.scalar_variable("count"), Some(5.0));
    assert_eq!(field(&case, "u"), &frame.field("u").unwrap().values[..]);
    assert_eq!(case.epoch(), frame.rng_epoch);
}

#[test]
fn added_field_is_initialized_and_removed_field_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let frame = first_half(&deck(&[("u", "0"), ("old", "7")], "1.5").text(), dir.path());
    let case = resume(&deck(&[("u", "0"), ("fresh", "2|3")], "1.5").text(), dir.path(), frame).unwrap();
    assert!(case.workspace().field("old").is_none());
    assert!(field(&case, "fresh").iter().all(|t| t.as_slice() == [2.0, 3.0]));
}

#[test]
fn shape_mismatch_is_an_assembly_error() {
    let dir = tempfile::tempdir().unwrap();
    let frame = first_half(&deck(&[("u", "0"), ("w", "1")], "1.5").text(), dir.path());
    let err = resume(&deck(&[("u", "0"), ("w", "1|1")], "1.5").text(), dir.path(), frame)
        .err()
        .unwrap();
    assert_eq!(err.class(), ErrorClass::Assembly);
    assert!(err.to_string().contains('w'), "{err}");
}

#[test]
fn resumed_run_continues_frame_numbering() {
    let dir = tempfile::tempdir().unwrap();
    let d = deck(&[("u", "0")], "1.5");
    let frame = first_half(&d.text(), dir.path());
    let mut longer = d;
    longer.simulated_time = "1".into();
    let mut case = resume(&longer.text(), dir.path(), frame).unwrap();
    let report = run(&mut case, &RunOptions::default()).unwrap();
    let indices: Vec<usize> = report.frames.iter().map(|f| f.index).collect();
    assert_eq!(indices, vec![2]);
    assert_eq!(report.steps, 5);
    assert_eq!(case.scalar_variable("count"), Some(10.0));
}
