#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "llnsim/cli/batch.hpp"
#include "llnsim/cli/codec_tool.hpp"
#include "llnsim/cli/serve.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
    using llnsim::cli::Verbosity;

    CLI::App app{"llnsim - discrete-event simulator for RPL over 6LoWPAN networks"};
    app.set_version_flag("--version", "llnsim 0.1.0");

    llnsim::cli::RunConfig config;
    std::string out_dir = config.out_dir.string();
    std::string scenario;
    bool quiet = false;
    bool verbose = false;
    app.add_option("--scenario", scenario, "Scenario JSON file")->check(CLI::ExistingFile);
    app.add_option("--seed", config.seed, "Override the scenario seed");
    app.add_option("--duration", config.duration_s, "Override the duration (virtual seconds)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "Report directory")->capture_default_str();
    app.add_option("--serve", config.serve_port, "Serve the live control protocol on 127.0.0.1:PORT")
        ->check(CLI::Range(1024, 65535));
    auto* q = app.add_flag("--quiet,-q", quiet, "Print nothing but errors");
    app.add_flag("--verbose,-v", verbose, "Print progress")->excludes(q);

    std::string headers;
    std::string context;
    auto* codec = app.add_subcommand("codec", "Compress a file of IPv6 headers and report sizes");
    codec->add_option("--headers", headers, "One 40-octet header per line, hex")->required()->check(CLI::ExistingFile);
    codec->add_option("--context", context, "Link-layer context JSON")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    if (codec->parsed()) return llnsim::cli::run_codec_tool(headers, context, std::cout, std::cerr);

    if (scenario.empty()) {
        std::cerr << "llnsim: --scenario is required\n" << app.help();
        return 2;
    }
    config.scenario = scenario;
    config.out_dir = out_dir;
    config.verbosity = quiet ? Verbosity::quiet : verbose ? Verbosity::verbose : Verbosity::normal;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    if (config.serve_port) return llnsim::cli::serve(config, std::cout, std::cerr, g_stop);
    return llnsim::cli::run_batch(config, std::cout, std::cerr, &g_stop);
}
