#include "decsde/trainer/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "decsde/common/error.h"

namespace decsde::trainer {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'S', 'D', 'E'};
constexpr uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw DataError("cannot write checkpoint " + path.string());
  }
  template <typename U>
  void pod(U v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod(static_cast<uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename U>
  void values(const numkernel::Tensor<U>& t) {
    out_.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(U)));
  }
  void finish() {
    out_.flush();
    if (!out_) throw DataError("error while writing checkpoint " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot read checkpoint " + path.string());
  }
  template <typename U>
  U pod() {
    U v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    check();
    return v;
  }
  std::string str() {
    const auto n = pod<uint32_t>();
    if (n > (1u << 30)) fail("implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }
  template <typename U>
  void values(numkernel::Tensor<U>& t) {
    in_.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(U)));
    check();
  }
  [[noreturn]] void fail(const std::string& what) {
    throw DataError("checkpoint " + path_.string() + ": " + what);
  }

 private:
  void check() {
    if (!in_) fail("truncated file");
  }
  std::ifstream in_;
  std::filesystem::path path_;
};

CheckpointInfo read_header(Reader& r) {
  char magic[4];
  for (char& c : magic) c = r.pod<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic");
  if (r.pod<uint32_t>() != kVersion) r.fail("unsupported version");
  CheckpointInfo info;
  info.value_bytes = r.pod<uint32_t>();
  if (info.value_bytes != 4 && info.value_bytes != 8) r.fail("bad value width");
  info.config_text = r.str();
  const auto nfiles = r.pod<uint32_t>();
  for (uint32_t i = 0; i < nfiles; ++i) {
    auto key = r.str();
    info.files.emplace_back(std::move(key), r.str());
  }
  info.epoch = r.pod<int64_t>();
  info.step = r.pod<int64_t>();
  info.seed = r.pod<uint64_t>();
  info.has_optimizer = r.pod<uint8_t>() != 0;
  return info;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, nmt::Transformer<T>& model, Trainer<T>* trainer,
                     const CheckpointInfo& info) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    Writer w(tmp);
    for (char c : kMagic) w.pod(c);
    w.pod(kVersion);
    w.pod(static_cast<uint32_t>(sizeof(T)));
    w.str(info.config_text);
    w.pod(static_cast<uint32_t>(info.files.size()));
    for (const auto& [k, v] : info.files) {
      w.str(k);
      w.str(v);
    }
    w.pod(trainer ? trainer->epoch() : info.epoch);
    w.pod(trainer ? trainer->step() : info.step);
    w.pod(trainer ? trainer->config().seed : info.seed);
    w.pod(static_cast<uint8_t>(trainer != nullptr));
    const auto& params = model.params().all();
    w.pod(static_cast<uint32_t>(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& p = *params[i];
      w.str(p.name);
      w.pod(static_cast<uint32_t>(p.value.shape().size()));
      for (int64_t dim : p.value.shape()) w.pod(dim);
      w.values(p.value);
      if (trainer) {
        w.values(trainer->optimizer().first_moments()[i]);
        w.values(trainer->optimizer().second_moments()[i]);
      }
    }
    w.finish();
  }
  std::filesystem::rename(tmp, path);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  Reader r(path);
  return read_header(r);
}

template <typename T>
CheckpointInfo load_checkpoint(const std::filesystem::path& path, nmt::Transformer<T>& model, Trainer<T>* trainer) {
  Reader r(path);
  CheckpointInfo info = read_header(r);
  if (info.value_bytes != sizeof(T)) r.fail("stored value width differs from the model's");
  const auto& params = model.params().all();
  const auto n = r.pod<uint32_t>();
  if (n != params.size()) r.fail("parameter count " + std::to_string(n) + " != model's " + std::to_string(params.size()));
  const bool with_opt = trainer != nullptr && info.has_optimizer;
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto name = r.str();
    if (name != p.name) r.fail("parameter " + std::to_string(i) + " is '" + name + "', model expects '" + p.name + "'");
    numkernel::Shape shape(r.pod<uint32_t>());
    for (auto& dim : shape) dim = r.pod<int64_t>();
    if (shape != p.value.shape())
      r.fail("shape of '" + name + "' is " + numkernel::shape_string(shape) + ", model expects " +
             numkernel::shape_string(p.value.shape()));
    r.values(p.value);
    p.touch();
    if (info.has_optimizer) {
      numkernel::Tensor<T> m(shape), v(shape);
      r.values(m);
      r.values(v);
      if (with_opt) {
        trainer->optimizer().first_moments()[i] = std::move(m);
        trainer->optimizer().second_moments()[i] = std::move(v);
      }
    }
  }
  if (with_opt) {
    trainer->optimizer().set_steps(info.step);
    trainer->set_epoch(info.epoch);
  }
  return info;
}

template void save_checkpoint(const std::filesystem::path&, nmt::Transformer<float>&, Trainer<float>*,
                              const CheckpointInfo&);
template void save_checkpoint(const std::filesystem::path&, nmt::Transformer<double>&, Trainer<double>*,
                              const CheckpointInfo&);
template CheckpointInfo load_checkpoint(const std::filesystem::path&, nmt::Transformer<float>&, Trainer<float>*);
template CheckpointInfo load_checkpoint(const std::filesystem::path&, nmt::Transformer<double>&, Trainer<double>*);

}  // namespace decsde::trainer
