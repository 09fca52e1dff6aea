#include "io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace usscan {

namespace {

std::string fmt_f(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
std::string fmt_i(long long v) { return std::to_string(v); }
std::string fmt_u(std::uint64_t v) { return std::to_string(v); }

double parse_f(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw ConfigMismatch("bad numeric value: " + s);
    return v;
}
long long parse_i(const std::string& s) {
    return static_cast<long long>(parse_f(s));
}
std::uint64_t parse_u(const std::string& s) { return std::strtoull(s.c_str(), nullptr, 10); }

std::string opt_name(OptKind k) { return k == OptKind::Adam ? "adam" : "sgd"; }
OptKind opt_parse(const std::string& s) {
    if (s == "sgd") return OptKind::Sgd;
    if (s == "adam") return OptKind::Adam;
    throw ConfigMismatch("unknown optimizer: " + s);
}

struct Field {
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define F_DBL(key, expr)                                            \
    {key, [](const RunConfig& c) { return fmt_f(c.expr); },         \
     [](RunConfig& c, const std::string& s) { c.expr = parse_f(s); }}
#define F_INT(key, expr)                                            \
    {key, [](const RunConfig& c) { return fmt_i(c.expr); },         \
     [](RunConfig& c, const std::string& s) { c.expr = static_cast<int>(parse_i(s)); }}
#define F_U64(key, expr)                                            \
    {key, [](const RunConfig& c) { return fmt_u(c.expr); },         \
     [](RunConfig& c, const std::string& s) { c.expr = parse_u(s); }}
#define F_SZT(key, expr)                                            \
    {key, [](const RunConfig& c) { return fmt_u(c.expr); },         \
     [](RunConfig& c, const std::string& s) { c.expr = static_cast<size_t>(parse_u(s)); }}
#define F_BOOL(key, expr)                                           \
    {key, [](const RunConfig& c) { return c.expr ? std::string("1") : std::string("0"); }, \
     [](RunConfig& c, const std::string& s) { c.expr = (parse_i(s) != 0); }}
#define F_OPT(key, expr)                                            \
    {key, [](const RunConfig& c) { return opt_name(c.expr); },      \
     [](RunConfig& c, const std::string& s) { c.expr = opt_parse(s); }}
#define F_STR(key, expr)                                            \
    {key, [](const RunConfig& c) { return c.expr; },                \
     [](RunConfig& c, const std::string& s) { c.expr = s; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        F_DBL("phantom.surface_height", phantom.surface_height),
        F_DBL("phantom.target_cx", phantom.target_center[0]),
        F_DBL("phantom.target_cy", phantom.target_center[1]),
        F_DBL("phantom.target_cz", phantom.target_center[2]),
        F_DBL("phantom.radius_x", phantom.target_radii[0]),
        F_DBL("phantom.radius_y", phantom.target_radii[1]),
        F_DBL("phantom.radius_z", phantom.target_radii[2]),
        F_DBL("phantom.stiffness", phantom.stiffness),
        F_DBL("phantom.stiffness_contrast", phantom.stiffness_contrast),
        F_DBL("phantom.core_radius", phantom.core_radius),
        F_DBL("phantom.torque_coeff", phantom.torque_coeff),
        F_U64("phantom.speckle_seed", phantom.speckle_seed),
        F_DBL("phantom.background_level", phantom.background_level),
        F_DBL("phantom.target_level", phantom.target_level),
        F_DBL("phantom.px_per_m", phantom.px_per_m),
        F_DBL("phantom.px_per_rad", phantom.px_per_rad),
        F_DBL("phantom.fov_px", phantom.fov_px),
        F_DBL("phantom.beam_width", phantom.beam_width),
        F_DBL("phantom.scan_depth", phantom.scan_depth),
        F_DBL("phantom.tol_pos", phantom.tol_pos),
        F_DBL("phantom.tol_ang", phantom.tol_ang),
        F_DBL("phantom.annulus_r_in", phantom.annulus_r_in),
        F_DBL("phantom.annulus_r_out", phantom.annulus_r_out),
        F_DBL("phantom.start_tilt_max", phantom.start_tilt_max),
        F_DBL("phantom.step_cap", phantom.step_cap),
        F_DBL("phantom.workspace_lo_x", phantom.workspace.lo[0]),
        F_DBL("phantom.workspace_lo_y", phantom.workspace.lo[1]),
        F_DBL("phantom.workspace_lo_z", phantom.workspace.lo[2]),
        F_DBL("phantom.workspace_hi_x", phantom.workspace.hi[0]),
        F_DBL("phantom.workspace_hi_y", phantom.workspace.hi[1]),
        F_DBL("phantom.workspace_hi_z", phantom.workspace.hi[2]),
        F_DBL("phantom.oracle_kp", phantom.oracle_kp),
        F_DBL("phantom.oracle_ko", phantom.oracle_ko),
        F_DBL("phantom.oracle_dp_cap", phantom.oracle_dp_cap),
        F_DBL("phantom.oracle_dq_cap", phantom.oracle_dq_cap),
        F_INT("phantom.max_episode_steps", phantom.max_episode_steps),

        F_INT("arch.image_h", arch.image_h),
        F_INT("arch.image_w", arch.image_w),
        F_INT("arch.conv1_ch", arch.conv1_ch),
        F_INT("arch.conv2_ch", arch.conv2_ch),
        F_INT("arch.conv_kernel", arch.conv_kernel),
        F_INT("arch.conv_stride", arch.conv_stride),
        F_INT("arch.feature_dim", arch.feature_dim),
        F_INT("arch.encoder_hidden", arch.encoder_hidden),
        F_INT("arch.action_hidden", arch.action_hidden),
        F_INT("arch.quality_hidden", arch.quality_hidden),

        F_DBL("bc.alpha", bc.alpha),
        F_INT("bc.epochs", bc.epochs),
        F_INT("bc.batch_size", bc.batch_size),
        F_DBL("bc.split_ratio", bc.split_ratio),
        F_OPT("bc.optimizer", bc.optimizer),

        F_DBL("quality.alpha", quality.alpha),
        F_INT("quality.epochs", quality.epochs),
        F_INT("quality.batch_size", quality.batch_size),
        F_DBL("quality.split_ratio", quality.split_ratio),
        F_OPT("quality.optimizer", quality.optimizer),
        F_BOOL("quality.class_weighted", quality.class_weighted),

        F_DBL("guidance.reward_threshold", guidance.reward_threshold),
        F_INT("guidance.epochs", guidance.epochs),
        F_INT("guidance.rollouts_per_epoch", guidance.rollouts_per_epoch),
        F_INT("guidance.max_steps", guidance.max_steps),
        F_DBL("guidance.alpha", guidance.alpha),
        F_INT("guidance.batch_size", guidance.batch_size),
        F_SZT("guidance.buffer_capacity", guidance.buffer_capacity),
        F_INT("guidance.train_samples_per_epoch", guidance.train_samples_per_epoch),
        F_OPT("guidance.optimizer", guidance.optimizer),
        F_INT("guidance.success_window", guidance.success_window),
        F_DBL("guidance.q_high", guidance.q_high),
        F_DBL("guidance.q_low", guidance.q_low),

        F_U64("master_seed", master_seed),
        F_STR("out_dir", out_dir),
        F_INT("episodes", episodes),
        F_BOOL("hold_mode", hold_mode),
        F_INT("hold_steps", hold_steps),
        F_INT("eval_episodes", eval_episodes),
        F_INT("eval_max_steps", eval_max_steps),
    };
    return f;
}

}  // namespace

RunConfig::RunConfig() {
    // The head-only quality stage is cheap, so it gets a longer default run.
    quality.epochs = 300;
    sync();
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    for (const Field& f : fields())
        out << f.name << " = " << f.get(*this) << "\n";
    return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigMismatch("config line " + std::to_string(lineno) + ": missing '='");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        bool found = false;
        for (const Field& f : fields()) {
            if (f.name == key) {
                f.set(cfg, val);
                found = true;
                break;
            }
        }
        if (!found)
            throw ConfigMismatch("config line " + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
    }
    cfg.sync();
    return cfg;
}

void RunConfig::set_key(const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (f.name == key) {
            f.set(*this, value);
            sync();
            return;
        }
    }
    throw ConfigMismatch("unknown config key '" + key + "'");
}

std::string RunConfig::get_key(const std::string& key) const {
    for (const Field& f : fields())
        if (f.name == key) return f.get(*this);
    throw ConfigMismatch("unknown config key '" + key + "'");
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open config for writing: " + path.string());
    out << serialize();
    if (!out) throw IoError("write failed: " + path.string());
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

// ---- binary helpers ----

namespace {

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError(std::string("truncated read: ") + what);
    return v;
}

void put_magic(std::ostream& out, const char* magic) { out.write(magic, 6); }

void check_magic(std::istream& in, const char* magic, const char* what) {
    char buf[6];
    in.read(buf, 6);
    if (!in || std::memcmp(buf, magic, 6) != 0)
        throw IoError(std::string("bad magic, not a ") + what + " file");
}

std::uint64_t fnv1a(const unsigned char* data, size_t n,
                    std::uint64_t h = 1469598103934665603ULL) {
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& d,
                   int image_h, int image_w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open dataset for writing: " + path.string());

    std::uint32_t episodes = 0;
    {
        std::uint32_t last = 0xffffffffu;
        for (const Record& r : d.records)
            if (r.episode_id != last) {
                ++episodes;
                last = r.episode_id;
            }
    }

    put_magic(out, "USDEMO");
    put<std::uint32_t>(out, kDatasetVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(image_h));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(image_w));
    put<std::uint64_t>(out, d.size());
    put<std::uint32_t>(out, episodes);

    for (const Record& r : d.records) {
        if (r.obs.image.height != image_h || r.obs.image.width != image_w)
            throw IoError("write_dataset: record image resolution mismatch");
        put<std::uint32_t>(out, r.episode_id);
        put<std::uint32_t>(out, r.step);
        for (double px : r.obs.image.pixels)
            put<float>(out, static_cast<float>(px));
        for (double v : r.obs.position) put<double>(out, v);
        put<double>(out, r.obs.orientation.w);
        put<double>(out, r.obs.orientation.x);
        put<double>(out, r.obs.orientation.y);
        put<double>(out, r.obs.orientation.z);
        for (double v : r.obs.wrench.force) put<double>(out, v);
        for (double v : r.obs.wrench.torque) put<double>(out, v);
        for (double v : r.action.dp) put<double>(out, v);
        for (double v : r.action.dq) put<double>(out, v);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(r.label));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path.string());
    check_magic(in, "USDEMO", "dataset");
    auto version = get<std::uint32_t>(in, "version");
    if (version != kDatasetVersion)
        throw IoError("unsupported dataset version " + std::to_string(version));
    int h = static_cast<int>(get<std::uint32_t>(in, "image_h"));
    int w = static_cast<int>(get<std::uint32_t>(in, "image_w"));
    auto count = get<std::uint64_t>(in, "record count");
    get<std::uint32_t>(in, "episode count");

    Dataset d;
    d.records.reserve(count);
    size_t npix = static_cast<size_t>(h) * w;
    for (std::uint64_t i = 0; i < count; ++i) {
        Record r;
        r.episode_id = get<std::uint32_t>(in, "episode_id");
        r.step = get<std::uint32_t>(in, "step");
        r.obs.image.height = h;
        r.obs.image.width = w;
        r.obs.image.pixels.resize(npix);
        for (size_t p = 0; p < npix; ++p)
            r.obs.image.pixels[p] = get<float>(in, "pixel");
        for (double& v : r.obs.position) v = get<double>(in, "position");
        r.obs.orientation.w = get<double>(in, "ow");
        r.obs.orientation.x = get<double>(in, "ox");
        r.obs.orientation.y = get<double>(in, "oy");
        r.obs.orientation.z = get<double>(in, "oz");
        for (double& v : r.obs.wrench.force) v = get<double>(in, "force");
        for (double& v : r.obs.wrench.torque) v = get<double>(in, "torque");
        for (double& v : r.action.dp) v = get<double>(in, "dp");
        for (double& v : r.action.dq) v = get<double>(in, "dq");
        r.label = get<std::uint8_t>(in, "label");
        d.records.push_back(std::move(r));
    }
    return d;
}

void write_checkpoint(const std::filesystem::path& path, PolicyParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());

    std::vector<Tensor*> tensors = params.all_tensors();
    std::uint64_t count = 0;
    std::uint64_t checksum = 1469598103934665603ULL;
    for (Tensor* t : tensors) {
        count += t->size();
        checksum = fnv1a(reinterpret_cast<const unsigned char*>(t->data.data()),
                         t->data.size() * sizeof(double), checksum);
    }

    const ArchConfig& a = params.cfg();
    put_magic(out, "USCKPT");
    put<std::uint32_t>(out, kCheckpointVersion);
    for (int v : {a.image_h, a.image_w, a.conv1_ch, a.conv2_ch, a.conv_kernel,
                  a.conv_stride, a.feature_dim, a.encoder_hidden, a.action_hidden,
                  a.quality_hidden})
        put<std::int32_t>(out, v);
    put<std::uint8_t>(out, params.bc_trained ? 1 : 0);
    put<std::uint8_t>(out, params.quality_trained ? 1 : 0);
    put<std::uint64_t>(out, count);
    put<std::uint64_t>(out, checksum);
    for (Tensor* t : tensors)
        out.write(reinterpret_cast<const char*>(t->data.data()),
                  static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
}

PolicyPtr read_checkpoint(const std::filesystem::path& path, const ArchConfig& expect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    check_magic(in, "USCKPT", "checkpoint");
    auto version = get<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    int fields[10];
    for (int& f : fields) f = get<std::int32_t>(in, "arch field");
    const int want[10] = {expect.image_h, expect.image_w, expect.conv1_ch,
                          expect.conv2_ch, expect.conv_kernel, expect.conv_stride,
                          expect.feature_dim, expect.encoder_hidden,
                          expect.action_hidden, expect.quality_hidden};
    for (int i = 0; i < 10; ++i)
        if (fields[i] != want[i])
            throw ConfigMismatch("checkpoint ArchConfig does not match the run config");

    bool bc_trained = get<std::uint8_t>(in, "bc flag") != 0;
    bool quality_trained = get<std::uint8_t>(in, "quality flag") != 0;
    auto count = get<std::uint64_t>(in, "param count");
    auto checksum = get<std::uint64_t>(in, "checksum");

    PolicyPtr params = init_policy(expect, 0);
    std::vector<Tensor*> tensors = params->all_tensors();
    std::uint64_t have = 0;
    for (Tensor* t : tensors) have += t->size();
    if (have != count)
        throw ConfigMismatch("checkpoint parameter count mismatch");

    std::uint64_t actual = 1469598103934665603ULL;
    for (Tensor* t : tensors) {
        in.read(reinterpret_cast<char*>(t->data.data()),
                static_cast<std::streamsize>(t->data.size() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint payload");
        actual = fnv1a(reinterpret_cast<const unsigned char*>(t->data.data()),
                       t->data.size() * sizeof(double), actual);
    }
    if (actual != checksum)
        throw IoError("checkpoint checksum mismatch (corrupted file)");
    params->bc_trained = bc_trained;
    params->quality_trained = quality_trained;
    return params;
}

// ---- CSV ----

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open CSV for writing: " + path.string());
    return out;
}

}  // namespace

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& r) {
    std::ofstream out = open_csv(path);
    bool has_acc = !r.train_acc.empty();
    out << (has_acc ? "epoch,train_loss,val_loss,train_acc,val_acc\n"
                    : "epoch,train_loss,val_loss\n");
    for (size_t i = 0; i < r.train_loss.size(); ++i) {
        out << i << ',' << fmt_f(r.train_loss[i]) << ',' << fmt_f(r.val_loss[i]);
        if (has_acc) out << ',' << fmt_f(r.train_acc[i]) << ',' << fmt_f(r.val_acc[i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_postopt_report_csv(const std::filesystem::path& path, const PostOptReport& r) {
    std::ofstream out = open_csv(path);
    out << "epoch,buffer_loss,buffer_size\n";
    for (size_t i = 0; i < r.buffer_loss.size(); ++i)
        out << i << ',' << fmt_f(r.buffer_loss[i]) << ',' << r.buffer_size[i] << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void write_eval_csv(const std::filesystem::path& path, const EvalResult& result) {
    std::ofstream out = open_csv(path);
    out << "episode,step,q,label\n";
    for (size_t ep = 0; ep < result.traces.size(); ++ep) {
        const EpisodeTrace& t = result.traces[ep];
        for (size_t s = 0; s < t.steps.size(); ++s)
            out << ep << ',' << s << ',' << fmt_f(t.steps[s].confidence) << ','
                << t.steps[s].label << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out = open_csv(path);
    out << "episode,step,px,py,pz,ow,ox,oy,oz,fx,fy,fz,tx,ty,tz,"
           "dpx,dpy,dpz,dqw,dqx,dqy,dqz,label\n";
    for (const Record& r : d.records) {
        out << r.episode_id << ',' << r.step;
        for (double v : r.obs.position) out << ',' << fmt_f(v);
        out << ',' << fmt_f(r.obs.orientation.w) << ',' << fmt_f(r.obs.orientation.x)
            << ',' << fmt_f(r.obs.orientation.y) << ',' << fmt_f(r.obs.orientation.z);
        for (double v : r.obs.wrench.force) out << ',' << fmt_f(v);
        for (double v : r.obs.wrench.torque) out << ',' << fmt_f(v);
        for (double v : r.action.dp) out << ',' << fmt_f(v);
        for (double v : r.action.dq) out << ',' << fmt_f(v);
        out << ',' << r.label << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace usscan
