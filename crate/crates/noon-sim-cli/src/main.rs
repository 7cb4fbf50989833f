fn main() {
    let _ = noon_sim::min_hermitian_eigenvalue_probe();
    let _ = noon_sim::zgemm_probe();
}
