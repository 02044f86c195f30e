#include "cmsc/models.hpp"

#include "cmsc/checkpoint.hpp"

namespace cmsc {

CmscModels::CmscModels(int channels_)
    : channels(channels_),
      converters(channels_),
      selector("selector", channels_),
      encoder("codec.enc", channels_),
      decoder("codec.dec", channels_),
      fusion_lidar("fusion.lidar", channels_),
      fusion_camera("fusion.camera", channels_),
      detect_lidar("detect.lidar", channels_),
      detect_camera("detect.camera", channels_) {
    converters.register_params(store);
    selector.register_params(store);
    encoder.register_params(store);
    decoder.register_params(store);
    fusion_lidar.register_params(store);
    fusion_camera.register_params(store);
    detect_lidar.register_params(store);
    detect_camera.register_params(store);
    // Training steps run scenes in parallel; codec BatchNorm stats are
    // applied serially afterwards in scene order.
    encoder.bn1.defer_buffer_updates = true;
    encoder.bn2.defer_buffer_updates = true;
    decoder.bn1.defer_buffer_updates = true;
    decoder.bn2.defer_buffer_updates = true;
}

FusionNet& CmscModels::fusion(Modality ego) {
    check(ego != Modality::Standard, "fusion: ego modality must be a sensor modality");
    return ego == Modality::Lidar ? fusion_lidar : fusion_camera;
}

DetectHead& CmscModels::detector(Modality ego) {
    check(ego != Modality::Standard, "detector: ego modality must be a sensor modality");
    return ego == Modality::Lidar ? detect_lidar : detect_camera;
}

void CmscModels::init_weights(uint64_t seed) {
    Rng rng(hash_combine(seed, 0x1417ull));
    converters.init_weights(rng);
    selector.init_weights(rng);
    encoder.init_weights(rng);
    decoder.init_weights(rng);
    fusion_lidar.init_weights(rng);
    fusion_camera.init_weights(rng);
    detect_lidar.init_weights(rng);
    detect_camera.init_weights(rng);
}

void CmscModels::save(const std::string& path) const { save_params(store, path); }
void CmscModels::load(const std::string& path) { load_params(store, path); }

void CmscModels::freeze_for_bootstrap() {
    store.set_all_frozen(true);
    store.set_frozen_prefix("fusion.", false);
    store.set_frozen_prefix("detect.", false);
}

void CmscModels::freeze_for_stage1() {
    store.set_all_frozen(true);
    store.set_frozen_prefix("converter.", false);
}

void CmscModels::freeze_for_stage2() {
    store.set_all_frozen(true);
    store.set_frozen_prefix("selector.", false);
    store.set_frozen_prefix("codec.", false);
}

void CmscModels::unfreeze_all() { store.set_all_frozen(false); }

bool CmscModels::converters_frozen() const {
    for (const auto& e : store.entries())
        if (e.name.rfind("converter.", 0) == 0 && !e.buffer && !e.frozen) return false;
    return true;
}

}  // namespace cmsc
