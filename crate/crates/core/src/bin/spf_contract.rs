fn main() {
    eprintln!("pipeline not wired yet");
}
