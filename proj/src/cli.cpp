#include "overtake/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "overtake/harness.hpp"
#include "overtake/io.hpp"
#include "overtake/localization.hpp"
#include "overtake/netsim.hpp"

namespace overtake {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string input;
    std::string out;
    std::optional<std::uint64_t> seed;
    int verbosity = 0;

    // sweep
    std::string preset;
    double range_min = 100.0;
    double range_max = 1000.0;
    double range_step = 50.0;
    std::optional<std::size_t> count;
    bool with_localization = false;
    unsigned threads = 0;

    // kalman
    double duration = 60.0;
    double rate = 10.0;
    double gps_sigma = 7.0;
    double speed = 20.0;
    double accel_x = 0.5;
    double accel_y = 0.0;
};

std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Writes to --out when given, otherwise to the provided stream.
void emit(const Options& opt, std::ostream& out, const std::string& text)
{
    if (opt.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(opt.out, std::ios::binary);
    if (!file) {
        throw UsageError("cannot write output file '" + opt.out + "'");
    }
    file << text;
}

int cmd_assess(const Options& opt, std::ostream& out)
{
    const OvertakeScenario s = scenario_from_json(read_json_file(opt.input));
    nlohmann::json j = assessment_to_json(assess_safety(s));
    emit(opt, out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_kalman(const Options& opt, std::ostream& out)
{
    if (!(opt.rate > 0.0) || !(opt.duration > 0.0)) {
        throw DomainError("--rate and --duration must be > 0");
    }
    const double dt = 1.0 / opt.rate;
    const auto steps = static_cast<std::size_t>(std::llround(opt.duration * opt.rate)) + 1;
    const auto trajectory = constant_acceleration_trajectory(Vec4(0.0, 0.0, opt.speed, 0.0),
                                                             Vec2(opt.accel_x, opt.accel_y), dt, steps);
    TrackConfig cfg;
    cfg.dt = dt;
    cfg.gps_sigma = opt.gps_sigma;
    cfg.q = ProcessModel::constant_acceleration(dt).q;
    const auto result = track(trajectory, cfg, opt.seed.value_or(1));

    std::ostringstream os;
    os << "step,t_s,true_x,true_y,meas_x,meas_y,fused_x,fused_y\n";
    for (std::size_t k = 0; k < result.size(); ++k) {
        const auto& r = result[k];
        os << k << ',' << fixed(static_cast<double>(k) * dt, 3) << ',' << fixed(r.truth(0)) << ','
           << fixed(r.truth(1)) << ',' << fixed(r.measured(0)) << ',' << fixed(r.measured(1)) << ','
           << fixed(r.fused.s(0)) << ',' << fixed(r.fused.s(1)) << '\n';
    }
    emit(opt, out, os.str());
    return kExitOk;
}

int cmd_protocol(const Options& opt, std::ostream& out)
{
    ProtocolRun run = protocol_run_from_json(read_json_file(opt.input));
    if (opt.seed) {
        run.sim.seed = *opt.seed;
    }
    const SimTrace trace = overtake::run(run.world, run.sim, run.horizon);
    emit(opt, out, trace.to_jsonl());
    return kExitOk;
}

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err)
{
    ScenarioSpec spec;
    if (!opt.preset.empty()) {
        if (!opt.input.empty()) {
            throw UsageError("give either a spec file or --preset, not both");
        }
        auto found = builtin_spec(opt.preset);
        if (!found) {
            throw UsageError("unknown preset '" + opt.preset + "'");
        }
        spec = *found;
    } else if (!opt.input.empty()) {
        spec = spec_from_json(read_json_file(opt.input));
    } else {
        throw UsageError("sweep needs a spec file or --preset");
    }
    if (opt.seed) {
        spec.seed = *opt.seed;
    }
    if (opt.count) {
        spec.count = *opt.count;
    }

    const auto grid = make_range_grid(opt.range_min, opt.range_max, opt.range_step);
    const SweepResult result = run_sweep(spec, grid, {opt.with_localization, opt.threads});
    if (opt.with_localization) {
        err << "note: --with-localization is an extension experiment (GPS noise fused by the Kalman filter)\n";
    }
    if (opt.verbosity > 0) {
        err << spec.name << ": trend ratio " << trend_ratio(result) << ", false_safe non-increasing: "
            << (false_safe_non_increasing(result) ? "yes" : "no") << '\n';
    }
    std::ostringstream os;
    write_sweep_csv(os, result);
    emit(opt, out, os.str());
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Overtaking safety model, Kalman localization, intention protocol and range sweeps", "overtake"};
    app.require_subcommand(1);
    Options opt;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--out", opt.out, "Output file (default: stdout)");
        sub->add_option("--seed", opt.seed, "Seed override");
        sub->add_flag("-v,--verbose", opt.verbosity, "Verbosity");
    };

    auto* assess = app.add_subcommand("assess", "Assess one scenario file and print the result as JSON");
    assess->add_option("scenario", opt.input, "Scenario JSON")->required();
    common(assess);

    auto* kalman = app.add_subcommand("kalman", "Fuse a noisy GPS track and print true/measured/fused CSV");
    kalman->add_option("--duration", opt.duration, "Seconds")->capture_default_str();
    kalman->add_option("--rate", opt.rate, "Fixes per second")->capture_default_str();
    kalman->add_option("--gps-sigma", opt.gps_sigma, "GPS position std, m")->capture_default_str();
    kalman->add_option("--speed", opt.speed, "Initial speed, m/s")->capture_default_str();
    kalman->add_option("--accel-x", opt.accel_x, "m/s^2")->capture_default_str();
    kalman->add_option("--accel-y", opt.accel_y, "m/s^2")->capture_default_str();
    common(kalman);

    auto* protocol = app.add_subcommand("protocol", "Run a scripted multi-node handshake and print the JSON-lines trace");
    protocol->add_option("world", opt.input, "World JSON")->required();
    common(protocol);

    auto* sweep = app.add_subcommand("sweep", "Sweep the communication range and print mis-prediction CSV");
    sweep->add_option("spec", opt.input, "Scenario spec JSON");
    sweep->add_option("--preset", opt.preset, "Built-in spec name");
    sweep->add_option("--range-min", opt.range_min, "m")->capture_default_str();
    sweep->add_option("--range-max", opt.range_max, "m")->capture_default_str();
    sweep->add_option("--range-step", opt.range_step, "m")->capture_default_str();
    sweep->add_option("--count", opt.count, "Scenarios per range point (default 500)");
    sweep->add_flag("--with-localization", opt.with_localization, "Route positions through the Kalman filter");
    sweep->add_option("--threads", opt.threads, "Worker threads (0 = all cores)")->capture_default_str();
    common(sweep);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (!args.empty()) {
            err << "error: " << e.what() << '\n';
        }
        err << app.help();
        return kExitUsage;
    }

    try {
        if (assess->parsed()) {
            return cmd_assess(opt, out);
        }
        if (kalman->parsed()) {
            return cmd_kalman(opt, out);
        }
        if (protocol->parsed()) {
            return cmd_protocol(opt, out);
        }
        return cmd_sweep(opt, out, err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitDomain;
    }
}

} // namespace overtake
