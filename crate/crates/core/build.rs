fn main() {
    // LAPACK/BLAS provider. Debian's libopenblas bundles BLAS, CBLAS and LAPACK
    // symbols, so a single link directive covers everything ndarray-linalg needs.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
