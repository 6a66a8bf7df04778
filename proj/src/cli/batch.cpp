#include "llnsim/cli/batch.hpp"

#include <fmt/format.h>

#include "llnsim/sim/engine.hpp"

namespace llnsim::cli {

sim::Scenario prepare_scenario(const RunConfig& config) {
    sim::Scenario s = sim::load_scenario_file(config.scenario);
    if (config.seed) s.seed = *config.seed;
    if (config.duration_s) {
        s.duration_s = *config.duration_s;
        sim::validate(s);
    }
    return s;
}

int run_batch(const RunConfig& config, std::ostream& out, std::ostream& err, const std::atomic<bool>* stop) {
    sim::Scenario scenario;
    try {
        scenario = prepare_scenario(config);
    } catch (const std::exception& e) {
        err << "llnsim: " << e.what() << '\n';
        return 2;
    }

    try {
        sim::Engine engine(std::move(scenario));
        const SimTime end = engine.duration();
        // Run in slices so a termination request is noticed promptly.
        const SimTime slice = std::max<SimTime>(end / 20, kMicrosPerSecond);
        SimTime reached = 0;
        do {
            if (stop && stop->load()) {
                err << fmt::format("llnsim: interrupted at {:.3f} s virtual time\n", static_cast<double>(reached) / 1e6);
                break;
            }
            reached = std::min(end, reached + slice);
            engine.run_until(reached);
            if (config.verbosity == Verbosity::verbose) {
                err << fmt::format("[{:>5.1f}%] t={:.3f} s events={}\n", end ? 100.0 * reached / end : 100.0,
                                   static_cast<double>(reached) / 1e6, engine.events_fired());
            }
        } while (reached < end);
        engine.export_reports(config.out_dir);
        if (config.verbosity != Verbosity::quiet) {
            out << engine.summary_text();
            out << fmt::format("\nreports written to {}\n", config.out_dir.string());
        }
    } catch (const std::exception& e) {
        err << "llnsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace llnsim::cli
