//! Runs the `profile` and `plotdata` commands in process and lists the files.

use std::path::Path;

fn main() {
    let dir = std::env::temp_dir().join("deadcore-example");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("temp dir");
    let profile_ini = dir.join("profile.ini");
    std::fs::write(
        &profile_ini,
        "[potential]\nkind = characteristic\nq = 1\n\n[geometry]\nn = 2\nR = 4.6633\nN = 1000\nM = 200\n",
    )
    .unwrap();
    let out = dir.join("profile");
    let code = deadcore::cli::run(["deadcore", "profile", "--config", path(&profile_ini), "--out", path(&out)]);
    println!("profile exited with {code}");

    let plot_ini = dir.join("plot.ini");
    let text = format!(
        "[potential]\nkind = characteristic\n\n[geometry]\nn = 2\nR = 4.6633\n\n[output]\nprofile_csv = {}\noracle = harmonic\ndownsample = 100\n",
        out.join("profile_upper.csv").display()
    );
    std::fs::write(&plot_ini, text).unwrap();
    let plots = dir.join("plots");
    let code = deadcore::cli::run(["deadcore", "plotdata", "--config", path(&plot_ini), "--out", path(&plots)]);
    println!("plotdata exited with {code}");
    for d in [&out, &plots] {
        for e in std::fs::read_dir(d).unwrap() {
            println!("  {}", e.unwrap().path().display());
        }
    }
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
