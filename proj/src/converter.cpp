#include "cmsc/converter.hpp"

namespace cmsc {

ConverterNet::ConverterNet(std::string name, int channels, int se_reduction)
    : cnx(name + ".cnx", channels), se(name + ".se", channels, se_reduction) {
    kernels::ConvSpec spec;
    spec.cin = channels;
    spec.cout = channels;
    proj = Layer::conv2d(name + ".proj", spec);
}

Tensor ConverterNet::forward(const Tensor& x, Cache& cache, bool training) {
    cache.valid = true;
    Tensor t = cnx.forward(x, cache.c_cnx, training);
    t = se.forward(t, cache.c_se, training);
    return proj.forward(t, cache.c_proj, training);
}

Tensor ConverterNet::backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const {
    check(cache.valid, "converter: backward without cached forward activations");
    Tensor g = proj.backward(cache.c_proj, grad_out, sink);
    g = se.backward(cache.c_se, g, sink);
    return cnx.backward(cache.c_cnx, g, sink);
}

void ConverterNet::register_params(ParamStore& store) {
    cnx.register_params(store);
    se.register_params(store);
    store.register_layer(proj);
}

void ConverterNet::init_weights(Rng& rng) {
    cnx.init_weights(rng);
    se.init_weights(rng);
    proj.init_weights(rng);
}

void ConverterNet::set_identity_weights() {
    // Residual block reduces to the skip connection.
    cnx.pw2.params[0].fill(0.0);
    cnx.pw2.params[1].fill(0.0);
    // sigmoid(100) rounds to 1.0 in double precision, so the SE gate is an
    // exact pass-through.
    se.fc2.params[0].fill(0.0);
    se.fc2.params[1].fill(100.0);
    // Identity 1x1 conv.
    proj.params[0].fill(0.0);
    proj.params[1].fill(0.0);
    const int c = proj.conv.cin;
    for (int i = 0; i < c; ++i) proj.params[0].data[static_cast<size_t>(i) * c + i] = 1.0;
}

ConverterPairNet& Converters::pair(Modality m) {
    check(m == Modality::Lidar || m == Modality::Camera,
          "converter: no pair for modality " + std::string(modality_name(m)));
    return m == Modality::Lidar ? lidar : camera;
}
const ConverterPairNet& Converters::pair(Modality m) const {
    return const_cast<Converters*>(this)->pair(m);
}

FeatureMap Converters::to_standard(const FeatureMap& map, ConverterNet::Cache* cache,
                                   bool training) {
    check(map.modality != Modality::Standard,
          "to_standard: map is already in the standard space");
    FeatureMap out;
    out.vehicle_id = map.vehicle_id;
    out.modality = Modality::Standard;
    if (identity_mode) {
        out.tensor = map.tensor;
        return out;
    }
    ConverterNet::Cache local;
    out.tensor = pair(map.modality).to_std.forward(map.tensor, cache ? *cache : local, training);
    return out;
}

FeatureMap Converters::from_standard(const FeatureMap& map, Modality target,
                                     ConverterNet::Cache* cache, bool training) {
    check(map.modality == Modality::Standard, "from_standard: map must be in the standard space");
    check(target == Modality::Lidar || target == Modality::Camera,
          "from_standard: unknown target modality");
    FeatureMap out;
    out.vehicle_id = map.vehicle_id;
    out.modality = target;
    if (identity_mode) {
        out.tensor = map.tensor;
        return out;
    }
    ConverterNet::Cache local;
    out.tensor = pair(target).from_std.forward(map.tensor, cache ? *cache : local, training);
    return out;
}

FeatureMap Converters::cycle(const FeatureMap& map, bool training) {
    const Modality m = map.modality;
    return from_standard(to_standard(map, nullptr, training), m, nullptr, training);
}

void Converters::register_params(ParamStore& store) {
    lidar.to_std.register_params(store);
    lidar.from_std.register_params(store);
    camera.to_std.register_params(store);
    camera.from_std.register_params(store);
}

void Converters::init_weights(Rng& rng) {
    lidar.to_std.init_weights(rng);
    lidar.from_std.init_weights(rng);
    camera.to_std.init_weights(rng);
    camera.from_std.init_weights(rng);
}

}  // namespace cmsc
