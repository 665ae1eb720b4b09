fn main() {
    println!("swingstep");
}
