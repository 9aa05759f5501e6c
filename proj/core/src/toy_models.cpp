#include "fcdcast/toy_models.hpp"

#include "fcdcast/batch_norm.hpp"
#include "fcdcast/init.hpp"
#include "fcdcast/layers.hpp"

namespace fcd::models {

namespace {

nn::Tensor uniform(nn::Shape shape, Rng& rng, double lo, double hi) {
    nn::Tensor t(std::move(shape));
    for (double& v : t.values()) v = lo + (hi - lo) * uniform01(rng);
    return t;
}

// Standardized values of a batch of 5 stay within +-2, so beta = 3 with
// small positive head weights keeps every output strictly inside (0, 1).
void place_head_inside_clamp(nn::Sequential& net, Rng& rng) {
    nn::BatchNorm* last_bn = nullptr;
    nn::Dense* head = nullptr;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (auto* bn = dynamic_cast<nn::BatchNorm*>(&net.layer(i))) last_bn = bn;
        if (auto* d = dynamic_cast<nn::Dense*>(&net.layer(i))) head = d;
    }
    for (double& b : last_bn->beta().values()) b = 3.0;
    for (double& g : last_bn->gamma().values()) g = 0.8 + 0.4 * uniform01(rng);
    for (double& w : head->theta().values()) w = 0.02 + 0.04 * uniform01(rng);
}

}  // namespace

ToyCase make_toy_case(ModelKind kind, std::uint64_t seed) {
    Rng rng = substream(seed, "toy-" + to_string(kind));
    ToyCase c;
    c.options.check_input = true;
    c.options.regularization = {1e-3, 1e-2};
    switch (kind) {
    case ModelKind::fnn1:
    case ModelKind::fnn3:
        c.model = build_fnn({4, 3, kind == ModelKind::fnn1 ? 1u : 3u, 2});
        nn::initialize(c.model, rng);
        place_head_inside_clamp(c.model, rng);
        c.input = uniform({5, 4}, rng, -1, 1);
        c.target = uniform({5, 2}, rng, 0, 1);
        break;
    case ModelKind::vgg: {
        VggConfig v;
        v.channels = 2;
        v.height = 6;
        v.width = 6;
        v.blocks = {2};
        v.convs = {1};
        v.fc = {3};
        v.output_size = 2;
        c.model = build_vgg(v);
        nn::initialize(c.model, rng);
        place_head_inside_clamp(c.model, rng);
        c.input = uniform({5, 2, 6, 6}, rng, -1, 1);
        c.target = uniform({5, 2}, rng, 0, 1);
        break;
    }
    case ModelKind::lstm: {
        c.model = build_lstm({3, 4, 2, 2});
        nn::initialize(c.model, rng);
        // Outputs clamped at zero have zero gradient on both sides of the check.
        auto& head = dynamic_cast<nn::Dense&>(c.model.layer(2));
        head.theta() = uniform({4, 2}, rng, -0.3, 0.3);
        c.input = uniform({4, 2, 3}, rng, -1, 1);
        c.target = uniform({4, 2, 2}, rng, 0, 1);
        break;
    }
    }
    return c;
}

}  // namespace fcd::models
