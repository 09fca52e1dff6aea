#include "usscan.h"

#include <cstring>
#include <sstream>

#include "pipeline.hpp"

using namespace usscan;

namespace {

thread_local std::string g_last_error;

us_status status_of(const UsError& e) {
    switch (e.kind()) {
        case ErrorKind::Validation: return US_ERR_VALIDATION;
        case ErrorKind::Divergence: return US_ERR_DIVERGED;
        case ErrorKind::Io: return US_ERR_IO;
    }
    return US_ERR_VALIDATION;
}

template <typename Fn>
us_status guarded(Fn&& fn) {
    try {
        fn();
        return US_OK;
    } catch (const UsError& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return US_ERR_VALIDATION;
    }
}

const RunConfig& unwrap(const us_config* cfg) {
    return *reinterpret_cast<const RunConfig*>(cfg);
}

}  // namespace

extern "C" {

const char* us_last_error(void) { return g_last_error.c_str(); }

us_config* us_config_default(void) {
    return reinterpret_cast<us_config*>(new RunConfig());
}

us_config* us_config_load(const char* path) {
    try {
        return reinterpret_cast<us_config*>(new RunConfig(RunConfig::load(path)));
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

us_status us_config_save(const us_config* cfg, const char* path) {
    return guarded([&] { unwrap(cfg).save(path); });
}

us_status us_config_set(us_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        reinterpret_cast<RunConfig*>(cfg)->set_key(key, value);
    });
}

us_status us_config_get(const us_config* cfg, const char* key, char* buf,
                        size_t buflen) {
    return guarded([&] {
        std::string v = unwrap(cfg).get_key(key);
        if (buflen == 0) throw ConfigMismatch("us_config_get: zero-length buffer");
        std::strncpy(buf, v.c_str(), buflen - 1);
        buf[buflen - 1] = '\0';
    });
}

void us_config_free(us_config* cfg) {
    delete reinterpret_cast<RunConfig*>(cfg);
}

us_status us_gen_data(const us_config* cfg, const char* out_path,
                      us_gen_summary* summary) {
    return guarded([&] {
        GenSummary s = cmd_gen_data(unwrap(cfg), out_path);
        if (summary) {
            summary->records = s.records;
            summary->label1_records = s.label1;
            summary->episodes = s.episodes;
        }
    });
}

us_status us_train_bc(const us_config* cfg, const char* data_path,
                      const char* out_ckpt, const char* report_csv,
                      us_train_summary* summary) {
    return guarded([&] {
        TrainReport r = cmd_train_bc(unwrap(cfg), data_path, out_ckpt,
                                     report_csv ? report_csv : "");
        if (summary) {
            summary->final_train_loss = r.train_loss.back();
            summary->final_val_loss = r.val_loss.back();
            summary->final_train_acc = -1.0;
            summary->final_val_acc = -1.0;
        }
    });
}

us_status us_train_quality(const us_config* cfg, const char* data_path,
                           const char* in_ckpt, const char* out_ckpt,
                           const char* report_csv, us_train_summary* summary) {
    return guarded([&] {
        TrainReport r = cmd_train_quality(unwrap(cfg), data_path, in_ckpt, out_ckpt,
                                          report_csv ? report_csv : "");
        if (summary) {
            summary->final_train_loss = r.train_loss.back();
            summary->final_val_loss = r.val_loss.back();
            summary->final_train_acc = r.train_acc.back();
            summary->final_val_acc = r.val_acc.back();
        }
    });
}

us_status us_post_opt(const us_config* cfg, const char* in_ckpt,
                      const char* out_ckpt, const char* report_csv) {
    return guarded([&] {
        cmd_post_opt(unwrap(cfg), in_ckpt, out_ckpt, report_csv ? report_csv : "");
    });
}

us_status us_eval(const us_config* cfg, const char* ckpt_path, int n_episodes,
                  const char* out_csv, int use_oracle, us_eval_summary* summary) {
    return guarded([&] {
        RolloutSummary s = cmd_eval(unwrap(cfg), ckpt_path, n_episodes,
                                    out_csv ? out_csv : "", use_oracle != 0);
        if (summary) {
            summary->success_rate = s.success_rate;
            summary->overshoot_rate = s.overshoot_rate;
            summary->mean_terminal_offset = s.mean_terminal_offset;
            summary->episodes = s.episodes;
        }
    });
}

us_status us_plot_data(const char* data_path, const char* out_csv) {
    return guarded([&] {
        Dataset d = read_dataset(data_path);
        write_dataset_csv(out_csv, d);
    });
}

us_status us_gradcheck(int inject_fault, char* buf, size_t buflen, int* all_pass) {
    return guarded([&] {
        std::vector<GradCheckEntry> entries = cmd_gradcheck(inject_fault != 0);
        std::ostringstream out;
        bool ok = true;
        for (const GradCheckEntry& e : entries) {
            out << e.name << " max_rel_err=" << e.max_rel_err << " "
                << (e.pass ? "PASS" : "FAIL") << "\n";
            ok = ok && e.pass;
        }
        if (all_pass) *all_pass = ok ? 1 : 0;
        if (buf && buflen > 0) {
            std::string s = out.str();
            std::strncpy(buf, s.c_str(), buflen - 1);
            buf[buflen - 1] = '\0';
        }
    });
}

}  // extern "C"
