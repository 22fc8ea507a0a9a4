//! Build the two bundled synthetic datasets and round-trip them through
//! the CSV pair format the CLI reads and writes.
//!
//! ```text
//! cargo run --example generate_data
//! ```

use locdisc::data::{
    load_csv_dataset, make_concentric_rings, make_gaussian_blobs, write_csv_dataset,
};

fn main() -> locdisc::Result<()> {
    let blobs = make_gaussian_blobs(3, 4, 2, 0.5, 42)?;
    println!(
        "blobs: {} samples, {} dims, {} classes",
        blobs.len(),
        blobs.dim(),
        blobs.class_count()
    );
    for (i, label) in blobs.labels().iter().enumerate().take(4) {
        let x = blobs.samples().column(i);
        println!("  sample {i}: class {:?} at ({:+.2}, {:+.2})", label.unwrap(), x[0], x[1]);
    }

    let rings = make_concentric_rings(5, 0.02, 42)?;
    println!(
        "rings: {} samples on radii near 1 and 3 (noise 0.02)",
        rings.len()
    );
    for (i, label) in rings.labels().iter().enumerate() {
        let radius = rings.samples().column(i).norm();
        println!("  sample {i}: class {} at radius {radius:.3}", label.unwrap());
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let data_path = dir.path().join("data.csv");
    let labels_path = dir.path().join("labels.csv");
    write_csv_dataset(&blobs, &data_path, &labels_path)?;
    let reloaded = load_csv_dataset(&data_path, &labels_path)?;
    assert_eq!(reloaded.samples(), blobs.samples(), "CSV round trip is exact");
    assert_eq!(reloaded.labels(), blobs.labels());
    println!("CSV round trip through {} is bit-exact", data_path.display());
    Ok(())
}
