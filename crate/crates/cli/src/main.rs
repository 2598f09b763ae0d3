fn main() {
    std::process::exit(sar_attention_cli::run_command(std::env::args_os()));
}
