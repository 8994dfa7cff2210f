#include "slr/net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "slr/kernels.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

void fan_in_init(Tensor& w, Tensor& b, int fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w.val()) v = rng.uniform(-bound, bound);
    for (double& v : b.val()) v = 0.0;
}

}  // namespace

ToyNet::ToyNet(ToyNetConfig cfg) : cfg_(cfg) {
    e1w_ = Tensor::zeros(make_shape({cfg.c1, 3, 3, 3}), true);
    e1b_ = Tensor::zeros(make_shape({cfg.c1}), true);
    e2w_ = Tensor::zeros(make_shape({cfg.c2, cfg.c1, 3, 3}), true);
    e2b_ = Tensor::zeros(make_shape({cfg.c2}), true);
    e3w_ = Tensor::zeros(make_shape({cfg.c3, cfg.c2, 3, 3}), true);
    e3b_ = Tensor::zeros(make_shape({cfg.c3}), true);
    d1w_ = Tensor::zeros(make_shape({cfg.c2, cfg.c3, 3, 3}), true);
    d1b_ = Tensor::zeros(make_shape({cfg.c2}), true);
    d2w_ = Tensor::zeros(make_shape({cfg.c1, cfg.c2, 3, 3}), true);
    d2b_ = Tensor::zeros(make_shape({cfg.c1}), true);
    hw_ = Tensor::zeros(make_shape({kNumClasses, cfg.c1, 1, 1}), true);
    hb_ = Tensor::zeros(make_shape({kNumClasses}), true);
}

void ToyNet::init(uint64_t seed) {
    Rng rng(mix_seed(seed, 0x7091));
    fan_in_init(e1w_, e1b_, 3 * 9, rng);
    fan_in_init(e2w_, e2b_, cfg_.c1 * 9, rng);
    fan_in_init(e3w_, e3b_, cfg_.c2 * 9, rng);
    fan_in_init(d1w_, d1b_, cfg_.c3 * 9, rng);
    fan_in_init(d2w_, d2b_, cfg_.c2 * 9, rng);
    fan_in_init(hw_, hb_, cfg_.c1, rng);
}

ToyNet::Forward ToyNet::forward(Tape& tape, const Tensor& image) const {
    require(image.shape().ndim == 3 && image.shape().d[0] == 3, ErrorCategory::shape,
            "forward expects a (3,h,w) image");
    const int h = image.shape().d[1], w = image.shape().d[2];
    require(h % 4 == 0 && w % 4 == 0, ErrorCategory::shape,
            "image size must be divisible by 4");

    Tensor s1 = tape.avgpool2(tape.relu(tape.conv2d(image, e1w_, e1b_)));
    Tensor s2 = tape.avgpool2(tape.relu(tape.conv2d(s1, e2w_, e2b_)));
    Tensor s3 = tape.avgpool2(tape.relu(tape.conv2d(s2, e3w_, e3b_)));

    Tensor u1 = tape.relu(
        tape.conv2d(tape.resize_bilinear(s3, s2.shape().d[1], s2.shape().d[2]), d1w_, d1b_));
    Tensor u2 = tape.relu(
        tape.conv2d(tape.resize_bilinear(u1, s1.shape().d[1], s1.shape().d[2]), d2w_, d2b_));
    Tensor head = tape.conv2d(u2, hw_, hb_);
    Tensor logits = tape.resize_bilinear(head, h, w);
    Tensor probs = tape.softmax_channels(logits);
    return {s2, logits, probs};
}

ToyNet::Inference ToyNet::infer(const Field3& image) const {
    Tensor t = image_to_tensor(image);
    Tape tape;  // params require grad, so ops are recorded; values are what we need
    Forward f = forward(tape, t);

    Inference out;
    const int fc = cfg_.c2, fh = f.features.shape().d[1], fw = f.features.shape().d[2];
    out.features = Planes(fc, fh, fw);
    std::copy(f.features.val().begin(), f.features.val().end(), out.features.v.begin());
    out.probs = tensor_to_field3(f.probs);
    return out;
}

std::vector<Tensor> ToyNet::params() const {
    return {e1w_, e1b_, e2w_, e2b_, e3w_, e3b_, d1w_, d1b_, d2w_, d2b_, hw_, hb_};
}

std::vector<std::string> ToyNet::param_names() const {
    return {"enc1.w", "enc1.b", "enc2.w", "enc2.b", "enc3.w", "enc3.b",
            "dec1.w", "dec1.b", "dec2.w", "dec2.b", "head.w", "head.b"};
}

void ToyNet::zero_grad() {
    for (Tensor t : params()) t.zero_grad();
}

void ToyNet::save(const std::string& path) const {
    nlohmann::json header;
    header["params"] = nlohmann::json::array();
    auto names = param_names();
    auto ps = params();
    for (size_t i = 0; i < ps.size(); ++i) {
        nlohmann::json p;
        p["name"] = names[i];
        p["shape"] = std::vector<int>(ps[i].shape().d, ps[i].shape().d + ps[i].shape().ndim);
        header["params"].push_back(p);
    }
    std::string hs = header.dump();

    std::FILE* f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, ErrorCategory::io, "cannot write " + path);
    uint32_t len = static_cast<uint32_t>(hs.size());
    std::fwrite(&len, 4, 1, f);
    std::fwrite(hs.data(), 1, hs.size(), f);
    for (const Tensor& t : ps) {
        std::vector<float> buf(t.numel());
        for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(t.val()[i]);
        std::fwrite(buf.data(), 4, buf.size(), f);
    }
    std::fclose(f);
}

void ToyNet::load(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    require(f != nullptr, ErrorCategory::io, "cannot open " + path);
    uint32_t len = 0;
    if (std::fread(&len, 4, 1, f) != 1) {
        std::fclose(f);
        fail(ErrorCategory::parse, "truncated checkpoint " + path);
    }
    std::string hs(len, '\0');
    if (std::fread(hs.data(), 1, len, f) != len) {
        std::fclose(f);
        fail(ErrorCategory::parse, "truncated checkpoint " + path);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        std::fclose(f);
        fail(ErrorCategory::parse, std::string("bad checkpoint header: ") + e.what());
    }

    auto names = param_names();
    auto ps = params();
    const auto& plist = header["params"];
    if (plist.size() != ps.size()) {
        std::fclose(f);
        fail(ErrorCategory::data, "checkpoint parameter count mismatch");
    }
    for (size_t i = 0; i < ps.size(); ++i) {
        std::vector<int> shape = plist[i]["shape"].get<std::vector<int>>();
        std::vector<int> want(ps[i].shape().d, ps[i].shape().d + ps[i].shape().ndim);
        if (plist[i]["name"] != names[i] || shape != want) {
            std::fclose(f);
            fail(ErrorCategory::data, "checkpoint shape mismatch at " + names[i]);
        }
        std::vector<float> buf(ps[i].numel());
        if (std::fread(buf.data(), 4, buf.size(), f) != buf.size()) {
            std::fclose(f);
            fail(ErrorCategory::parse, "truncated checkpoint " + path);
        }
        for (size_t j = 0; j < buf.size(); ++j) ps[i].val()[j] = buf[j];
    }
    std::fclose(f);
}

ToyNet ToyNet::clone() const {
    ToyNet c(cfg_);
    auto src = params();
    auto dst = c.params();
    for (size_t i = 0; i < src.size(); ++i) dst[i].val() = src[i].val();
    return c;
}

Tensor image_to_tensor(const Field3& image) {
    const int w = image.width(), h = image.height();
    Tensor t = Tensor::zeros(make_shape({3, h, w}), false);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                t.val()[(static_cast<size_t>(c) * h + y) * w + x] = image.ch[c](x, y);
    return t;
}

Field3 tensor_to_field3(const Tensor& t) {
    require(t.shape().ndim == 3 && t.shape().d[0] == 3, ErrorCategory::shape,
            "expected a (3,h,w) tensor");
    const int h = t.shape().d[1], w = t.shape().d[2];
    Field3 f(w, h);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                f.ch[c](x, y) = t.val()[(static_cast<size_t>(c) * h + y) * w + x];
    return f;
}

}  // namespace slr
