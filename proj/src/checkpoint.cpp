#include "cmsc/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

namespace cmsc {

namespace {
constexpr char kMagic[8] = {'C', 'M', 'S', 'C', 'C', 'K', 'P', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace

void save_params(const ParamStore& store, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    check(f != nullptr, "save_params: cannot open '" + path + "' for writing");
    auto put = [&](const void* p, size_t n) {
        check(std::fwrite(p, 1, n, f.get()) == n, "save_params: short write to '" + path + "'");
    };
    put(kMagic, 8);
    const uint32_t count = static_cast<uint32_t>(store.entries().size());
    put(&count, 4);
    for (const auto& e : store.entries()) {
        const uint16_t len = static_cast<uint16_t>(e.name.size());
        put(&len, 2);
        put(e.name.data(), len);
        const uint8_t flags = e.buffer ? 1 : 0;
        put(&flags, 1);
        const uint32_t ndim = static_cast<uint32_t>(e.value->shape.size());
        put(&ndim, 4);
        for (int d : e.value->shape) {
            const int32_t v = d;
            put(&v, 4);
        }
        put(e.value->data.data(), e.value->data.size() * 8);
    }
}

void load_params(ParamStore& store, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    check(f != nullptr, "load_params: cannot open checkpoint '" + path + "'");
    auto get = [&](void* p, size_t n) {
        check(std::fread(p, 1, n, f.get()) == n, "load_params: truncated checkpoint '" + path + "'");
    };
    char magic[8];
    get(magic, 8);
    check(std::memcmp(magic, kMagic, 8) == 0, "load_params: '" + path + "' is not a checkpoint");
    uint32_t count = 0;
    get(&count, 4);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t len = 0;
        get(&len, 2);
        std::string name(len, '\0');
        get(name.data(), len);
        uint8_t flags = 0;
        get(&flags, 1);
        uint32_t ndim = 0;
        get(&ndim, 4);
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) {
            int32_t v = 0;
            get(&v, 4);
            shape[d] = v;
        }
        Tensor* dst = store.value(name);
        check(dst != nullptr, "load_params: checkpoint tensor '" + name + "' not in this model");
        check(dst->shape == shape, "load_params: shape mismatch for '" + name + "'");
        get(dst->data.data(), dst->data.size() * 8);
    }
}

}  // namespace cmsc
