use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include").join("ancolab.h"));
        }
        Err(cbindgen::Error::ParseSyntaxError { .. }) => {
            // rustc reports the syntax error itself; do not fail twice.
        }
        Err(e) => panic!("header generation failed: {e}"),
    }
}
