fn main() {
    println!("bistanton");
}
