use std::process::Command;

fn status(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_streamsplat"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&["cache-bench", "--images", "64", "--chunks", "8"]), 0);
    assert_eq!(status(&["no-such-command"]), 2);
    assert_eq!(status(&["reconstruct", "--predictor", "magic", "--out", "x"]), 2);
    assert_eq!(status(&["cache-bench", "--images", "4"]), 2);
    assert_eq!(
        status(&[
            "render",
            "--scene",
            "/nonexistent/s",
            "--trajectory",
            "/nonexistent/t",
            "--out",
            "x.ppm"
        ]),
        1
    );
}

#[test]
fn synth_then_render_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scene");
    let out = out.to_str().unwrap();
    assert_eq!(status(&["synth", "--frames", "8", "--seed", "3", "--out", out]), 0);
    let img = dir.path().join("v.fimg");
    let args = [
        "render",
        "--scene",
        &format!("{out}/scene.splat"),
        "--trajectory",
        &format!("{out}/trajectory.jsonl"),
        "--view",
        "2",
        "--out",
        img.to_str().unwrap(),
    ];
    assert_eq!(status(&args), 0);
    let read = streamsplat::raster::read_fimg(std::fs::File::open(&img).unwrap()).unwrap();
    assert_eq!((read.width(), read.height(), read.channels()), (64, 64, 12));
    assert_eq!(
        status(&["render", "--view", "99", &args[1], &args[2], &args[3], &args[4], "--out", "x.ppm"]),
        2
    );
}
