// Command-line front end; talks to the core exclusively through the
// shared-library C API.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usscan.h"

namespace {

struct ConfigHandle {
    us_config* cfg = nullptr;
    ~ConfigHandle() { us_config_free(cfg); }
};

int fail(us_status status) {
    std::fprintf(stderr, "error: %s\n", us_last_error());
    return static_cast<int>(status);
}

std::string default_out_dir() {
    const char* env = std::getenv("USSCAN_OUT_DIR");
    return env ? env : "out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ultrasound scanning-skill workbench"};
    app.require_subcommand(1);

    std::string config_path, seed_override, out_dir = default_out_dir();
    app.add_option("--config", config_path, "Run configuration file (key = value)");
    app.add_option("--seed", seed_override, "Override master_seed");
    app.add_option("--out-dir", out_dir, "Output directory (env: USSCAN_OUT_DIR)");

    std::string out_path, data_path, in_ckpt, out_ckpt, report_csv, eval_csv;
    int n_episodes = -1;
    bool use_oracle = false, inject_fault = false;

    auto* gen = app.add_subcommand("gen-data", "Record scripted demonstrations");
    gen->add_option("--out", out_path, "Output dataset file");

    auto* bc = app.add_subcommand("train-bc", "Behavior-clone the action policy");
    bc->add_option("--data", data_path, "Dataset file")->required();
    bc->add_option("--out", out_ckpt, "Output checkpoint");
    bc->add_option("--report", report_csv, "Per-epoch loss CSV");

    auto* tq = app.add_subcommand("train-quality", "Train the state-quality head");
    tq->add_option("--data", data_path, "Dataset file")->required();
    tq->add_option("--ckpt", in_ckpt, "Input checkpoint")->required();
    tq->add_option("--out", out_ckpt, "Output checkpoint");
    tq->add_option("--report", report_csv, "Per-epoch loss/accuracy CSV");

    auto* po = app.add_subcommand("post-opt", "Guided post-optimization");
    po->add_option("--ckpt", in_ckpt, "Input checkpoint")->required();
    po->add_option("--out", out_ckpt, "Output checkpoint");
    po->add_option("--report", report_csv, "Per-epoch buffer-loss CSV");

    auto* ev = app.add_subcommand("eval", "Evaluation rollouts");
    ev->add_option("--ckpt", in_ckpt, "Checkpoint to evaluate")->required();
    ev->add_option("--episodes", n_episodes, "Number of episodes");
    ev->add_option("--out", eval_csv, "Per-step confidence CSV");
    ev->add_flag("--oracle", use_oracle, "Drive with the scripted expert instead");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    gc->add_flag("--inject-fault", inject_fault, "Corrupt one gradient (test hook)");

    auto* pd = app.add_subcommand("plot-data", "Dump a dataset file to CSV");
    pd->add_option("--data", data_path, "Dataset file")->required();
    pd->add_option("--out", out_path, "Output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    if (pd->parsed()) {
        us_status s = us_plot_data(data_path.c_str(), out_path.c_str());
        return s == US_OK ? 0 : fail(s);
    }
    if (gc->parsed()) {
        char report[4096];
        int all_pass = 0;
        us_status s = us_gradcheck(inject_fault ? 1 : 0, report, sizeof report, &all_pass);
        if (s != US_OK) return fail(s);
        std::fputs(report, stdout);
        return all_pass ? 0 : 1;
    }

    ConfigHandle h;
    if (!config_path.empty()) {
        h.cfg = us_config_load(config_path.c_str());
        if (!h.cfg) return fail(US_ERR_IO);
    } else {
        h.cfg = us_config_default();
    }
    if (!seed_override.empty()) {
        us_status s = us_config_set(h.cfg, "master_seed", seed_override.c_str());
        if (s != US_OK) return fail(s);
    }

    auto in_out_dir = [&](const std::string& name) { return out_dir + "/" + name; };

    if (gen->parsed()) {
        if (out_path.empty()) out_path = in_out_dir("demos.bin");
        us_gen_summary s{};
        us_status st = us_gen_data(h.cfg, out_path.c_str(), &s);
        if (st != US_OK) return fail(st);
        std::printf("wrote %llu records over %llu episodes (%llu label-1, %.1f%%) to %s\n",
                    (unsigned long long)s.records, (unsigned long long)s.episodes,
                    (unsigned long long)s.label1_records,
                    s.records ? 100.0 * s.label1_records / s.records : 0.0,
                    out_path.c_str());
        return 0;
    }
    if (bc->parsed()) {
        if (out_ckpt.empty()) out_ckpt = in_out_dir("bc.ckpt");
        us_train_summary s{};
        us_status st = us_train_bc(h.cfg, data_path.c_str(), out_ckpt.c_str(),
                                   report_csv.empty() ? nullptr : report_csv.c_str(), &s);
        if (st != US_OK) return fail(st);
        std::printf("train loss %.6f, val loss %.6f -> %s\n", s.final_train_loss,
                    s.final_val_loss, out_ckpt.c_str());
        return 0;
    }
    if (tq->parsed()) {
        if (out_ckpt.empty()) out_ckpt = in_out_dir("quality.ckpt");
        us_train_summary s{};
        us_status st = us_train_quality(h.cfg, data_path.c_str(), in_ckpt.c_str(),
                                        out_ckpt.c_str(),
                                        report_csv.empty() ? nullptr : report_csv.c_str(),
                                        &s);
        if (st != US_OK) return fail(st);
        std::printf("train acc %.4f, val acc %.4f -> %s\n", s.final_train_acc,
                    s.final_val_acc, out_ckpt.c_str());
        return 0;
    }
    if (po->parsed()) {
        if (out_ckpt.empty()) out_ckpt = in_out_dir("optimized.ckpt");
        us_status st = us_post_opt(h.cfg, in_ckpt.c_str(), out_ckpt.c_str(),
                                   report_csv.empty() ? nullptr : report_csv.c_str());
        if (st != US_OK) return fail(st);
        std::printf("post-optimized checkpoint -> %s\n", out_ckpt.c_str());
        return 0;
    }
    if (ev->parsed()) {
        us_eval_summary s{};
        us_status st = us_eval(h.cfg, in_ckpt.c_str(), n_episodes,
                               eval_csv.empty() ? nullptr : eval_csv.c_str(),
                               use_oracle ? 1 : 0, &s);
        if (st != US_OK) return fail(st);
        std::printf("success_rate %.3f overshoot_rate %.3f mean_terminal_offset %.5f "
                    "over %d episodes\n",
                    s.success_rate, s.overshoot_rate, s.mean_terminal_offset, s.episodes);
        return 0;
    }
    return 0;
}
