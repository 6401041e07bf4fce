fn main() {
    println!("hartree-lab");
}
