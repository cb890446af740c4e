#include "phaseat/persistence.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "phaseat/error.hpp"

namespace phaseat {

namespace {

constexpr unsigned char kMagic[4] = {'P', 'H', 'A', 'T'};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const unsigned char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
    std::vector<unsigned char> take() { return std::move(out_); }

private:
    std::vector<unsigned char> out_;
};

class Reader {
public:
    explicit Reader(std::span<const unsigned char> in) : in_(in) {}

    std::uint8_t u8() { return need(1)[0]; }
    std::uint32_t u32() {
        const auto* p = need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* p = need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    const unsigned char* need(std::size_t n) {
        if (in_.size() - pos_ < n) throw FormatError("model file is truncated");
        const auto* p = in_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::span<const unsigned char> in_;
    std::size_t pos_ = 0;
};

std::uint8_t activation_code(Activation a) {
    switch (a) {
        case Activation::relu: return 0;
        case Activation::tanh: return 1;
        case Activation::identity: return 2;
    }
    return 2;
}

Activation activation_of(std::uint8_t code) {
    switch (code) {
        case 0: return Activation::relu;
        case 1: return Activation::tanh;
        case 2: return Activation::identity;
        default: throw FormatError("unknown activation code " + std::to_string(code));
    }
}

void write_descriptor(Writer& w, const ParameterSet& p) {
    w.u32(static_cast<std::uint32_t>(p.layers().size()));
    for (const auto& l : p.layers()) {
        w.u32(static_cast<std::uint32_t>(l.in));
        w.u32(static_cast<std::uint32_t>(l.out));
        w.u8(activation_code(l.activation));
    }
}

constexpr std::uint32_t kMaxExtent = 1u << 24;

ParameterSet read_descriptor(Reader& r) {
    const std::uint32_t n = r.u32();
    if (n > 1024) throw FormatError("implausible layer count");
    std::vector<Layer> layers(n);
    for (auto& l : layers) {
        l.in = r.u32();
        l.out = r.u32();
        if (l.in == 0 || l.out == 0 || l.in > kMaxExtent || l.out > kMaxExtent) {
            throw FormatError("implausible layer extent");
        }
        l.activation = activation_of(r.u8());
        l.weight.assign(l.in * l.out, 0.0);
        l.bias.assign(l.out, 0.0);
    }
    return ParameterSet(std::move(layers));
}

void write_values(Writer& w, const ParameterSet& p) {
    for (double v : p.flatten()) w.f64(v);
}

void read_values(Reader& r, ParameterSet& p) {
    std::vector<double> flat(p.parameter_count());
    for (double& v : flat) v = r.f64();
    p.assign(flat);
}

}  // namespace

std::vector<unsigned char> serialize_model(const PhaseModel& model, const FrequencyState* state) {
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kModelFormatVersion);

    w.u32(static_cast<std::uint32_t>(model.input_dim()));
    w.u32(static_cast<std::uint32_t>(model.num_classes()));
    w.u32(static_cast<std::uint32_t>(model.head_count()));
    write_descriptor(w, model.extractor());
    for (const auto& h : model.heads()) {
        write_descriptor(w, h.real);
        write_descriptor(w, h.imag);
    }
    w.f64(model.projection().scale);

    const auto& dir = model.projection().direction;
    w.u64(model.parameter_count() + dir.size());
    write_values(w, model.extractor());
    for (const auto& h : model.heads()) {
        write_values(w, h.real);
        write_values(w, h.imag);
    }
    for (double v : dir) w.f64(v);

    w.u8(state ? 1 : 0);
    if (state) {
        w.u64(state->k_max);
        w.u64(state->num_classes);
        w.f64(state->decay);
        w.u64(state->updates);
        for (const auto& c : state->ema_clean) {
            w.f64(c.real());
            w.f64(c.imag());
        }
        for (const auto& c : state->ema_adv) {
            w.f64(c.real());
            w.f64(c.imag());
        }
        for (double d : state->discrepancy) w.f64(d);
    }
    return w.take();
}

SavedModel deserialize_model(std::span<const unsigned char> bytes) {
    Reader r(bytes);
    const auto* magic = r.need(4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a model file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        throw FormatError("unsupported model format version " + std::to_string(version));
    }

    const std::uint32_t input_dim = r.u32();
    const std::uint32_t num_classes = r.u32();
    const std::uint32_t heads = r.u32();
    if (heads == 0 || heads > 4096) throw FormatError("implausible head count");
    ParameterSet extractor = read_descriptor(r);
    std::vector<PhaseHead> hs(heads);
    for (auto& h : hs) {
        h.real = read_descriptor(r);
        h.imag = read_descriptor(r);
    }
    const double scale = r.f64();

    const std::uint64_t count = r.u64();
    std::size_t expected = extractor.parameter_count() + input_dim;
    for (const auto& h : hs) expected += h.real.parameter_count() + h.imag.parameter_count();
    if (count != expected) throw FormatError("parameter count does not match the architecture");

    read_values(r, extractor);
    for (auto& h : hs) {
        read_values(r, h.real);
        read_values(r, h.imag);
    }
    ProjectionSpec proj;
    proj.scale = scale;
    proj.direction.resize(input_dim);
    for (double& v : proj.direction) v = r.f64();

    SavedModel out;
    try {
        out.model = PhaseModel(std::move(extractor), std::move(hs), std::move(proj));
        out.model.validate();
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("invalid model: ") + e.what());
    }
    if (out.model.input_dim() != input_dim || out.model.num_classes() != num_classes) {
        throw FormatError("descriptor dimensions disagree with the layers");
    }

    const std::uint8_t has_state = r.u8();
    if (has_state > 1) throw FormatError("bad frequency-state flag");
    if (has_state) {
        FrequencyState s;
        s.k_max = r.u64();
        s.num_classes = r.u64();
        if (s.k_max == 0 || s.k_max > kMaxExtent || s.num_classes > kMaxExtent) {
            throw FormatError("implausible frequency-state extents");
        }
        s.decay = r.f64();
        s.updates = r.u64();
        const std::size_t n = s.k_max * s.num_classes;
        s.ema_clean.resize(n);
        s.ema_adv.resize(n);
        for (auto& c : s.ema_clean) {
            const double re = r.f64();
            c = Complex(re, r.f64());
        }
        for (auto& c : s.ema_adv) {
            const double re = r.f64();
            c = Complex(re, r.f64());
        }
        s.discrepancy.resize(s.k_max);
        for (double& d : s.discrepancy) d = r.f64();
        try {
            s.validate();
        } catch (const Error& e) {
            throw FormatError(std::string("invalid frequency state: ") + e.what());
        }
        out.state = std::move(s);
    }
    if (!r.done()) throw FormatError("trailing bytes after model data");
    return out;
}

void save_model(const std::filesystem::path& path, const PhaseModel& model, const FrequencyState* state) {
    const auto bytes = serialize_model(model, state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model file '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing model file '" + path.string() + "'");
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read model file '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace phaseat
