// Command-line front end: track, eval, synth and sweep.

#include <llctrack/llctrack.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace llctrack;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::optional<double> beta;
    std::optional<int> particles;
    std::optional<int> threads;
    std::string config_path;
};

void add_overrides(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "flat JSON run configuration");
    cmd->add_option("--seed", o.seed, "random seed (overrides the config file)");
    cmd->add_option("--lambda", o.lambda, "coding regularization weight");
    cmd->add_option("--beta", o.beta, "weight regularization");
    cmd->add_option("--particles", o.particles, "number of particles");
    cmd->add_option("--threads", o.threads, "worker threads (0 = LLCTRACK_THREADS or all cores)");
}

// Built-in defaults, then the config file, then explicit flags.
TrackerConfig resolve_config(const Overrides& o)
{
    TrackerConfig config;
    if (!o.config_path.empty()) config = load_config(o.config_path, config);
    if (o.seed) config.seed = *o.seed;
    if (o.lambda) config.encoder.lambda = *o.lambda;
    if (o.beta) config.encoder.beta = *o.beta;
    if (o.particles) config.particles = *o.particles;
    if (o.threads) config.threads = *o.threads;
    config.validate();
    return config;
}

BoundingBox parse_box(const std::string& text)
{
    std::vector<double> v;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "--init: not a number '" + field + "'");
        }
    }
    if (v.size() != 4) throw Error(ErrorCode::InvalidArgument, "--init expects \"x,y,w,h\"");
    return {v[0], v[1], v[2], v[3]};
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

std::vector<double> parse_lambdas(const std::string& text)
{
    std::vector<double> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) {
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "--lambdas: not a number '" + field + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "--lambdas is empty");
    return out;
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::BoxOutOfFrame:
        case ErrorCode::DegenerateBox:
        case ErrorCode::ParseError:
        case ErrorCode::LengthMismatch:
            return kExitUsage;
        default:
            return kExitRuntime;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Locality-constrained coding particle-filter tracker"};
    app.require_subcommand(1);

    Overrides track_opts;
    std::string track_seq, track_init, track_out;
    auto* track = app.add_subcommand("track", "track a target through a frame sequence");
    track->add_option("--seq", track_seq, "sequence directory (img/ + groundtruth_rect.txt)")->required();
    track->add_option("--init", track_init, "initial box \"x,y,w,h\" (default: first ground-truth line)");
    track->add_option("--out", track_out, "output CSV")->required();
    add_overrides(track, track_opts);

    std::string eval_pred, eval_gt, eval_out;
    bool eval_truncate = false;
    auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
    eval->add_option("--pred", eval_pred, "prediction CSV")->required();
    eval->add_option("--gt", eval_gt, "ground-truth text file")->required();
    eval->add_option("--out", eval_out, "report JSON")->required();
    eval->add_flag("--truncate", eval_truncate, "truncate to the shorter input");

    std::string synth_kind, synth_out;
    int synth_frames = 100;
    std::uint64_t synth_seed = 42;
    auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
    synth->add_option("--kind", synth_kind, "moving-square | occlusion")->required();
    synth->add_option("--frames", synth_frames, "number of frames");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "random seed");

    Overrides sweep_opts;
    std::string sweep_seq, sweep_out, sweep_plot;
    std::string sweep_lambdas = "0,0.01,0.1,0.5,0.8,1,5,10";
    auto* sweep = app.add_subcommand("sweep", "mean overlap across a grid of lambda values");
    sweep->add_option("--seq", sweep_seq, "sequence directory")->required();
    sweep->add_option("--lambdas", sweep_lambdas, "comma-separated lambda grid");
    sweep->add_option("--out", sweep_out, "output CSV")->required();
    sweep->add_option("--plot", sweep_plot, "output SVG");
    add_overrides(sweep, sweep_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*track) {
            const auto config = resolve_config(track_opts);
            const auto paths = list_frames(track_seq);
            BoundingBox init;
            if (!track_init.empty()) {
                init = parse_box(track_init);
            } else {
                const auto gt = read_groundtruth(fs::path(track_seq) / "groundtruth_rect.txt");
                if (gt.empty()) throw Error(ErrorCode::InvalidArgument, "no --init and empty ground truth");
                init = gt.front();
            }
            const auto frames = load_frames(paths);
            const auto run = run_tracker(frames, init, config);
            write_text(track_out, format_track_csv(run.results));
            std::cerr << "tracked " << run.results.size() << " frames at " << run.fps << " fps\n";
        } else if (*eval) {
            const auto pred = read_predictions(eval_pred);
            const auto gt = read_groundtruth(eval_gt);
            const auto report = evaluate(pred, gt, eval_truncate);
            write_text(eval_out, to_json(report).dump(2) + "\n");
        } else if (*synth) {
            const auto kind = parse_synth_kind(synth_kind);
            if (synth_frames < 2) throw Error(ErrorCode::InvalidArgument, "--frames must be >= 2");
            write_sequence(synth_out, generate_sequence(kind, synth_frames, synth_seed));
        } else if (*sweep) {
            const auto config = resolve_config(sweep_opts);
            const auto lambdas = parse_lambdas(sweep_lambdas);
            const auto frames = load_frames(list_frames(sweep_seq));
            const auto gt = read_groundtruth(fs::path(sweep_seq) / "groundtruth_rect.txt");
            const auto rows = lambda_sweep(frames, gt, config, lambdas);
            write_text(sweep_out, format_sweep_csv(rows));
            if (!sweep_plot.empty()) write_text(sweep_plot, format_sweep_svg(rows));
            bool any_ok = false;
            for (const auto& r : rows) {
                if (r.error.empty()) {
                    any_ok = true;
                } else {
                    std::cerr << "lambda " << r.lambda << " failed: " << r.error << '\n';
                }
            }
            if (!any_ok) return kExitRuntime;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
