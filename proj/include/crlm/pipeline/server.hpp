#pragma once

// HTTP service behind the slice viewer.
//
//   GET    /api/volumes                              [{id, dims, spacing}]
//   GET    /api/volumes/{id}/slice?view&index&wl&ww  8-bit gray PNG
//   POST   /api/volumes/{id}/samonai                 {view, index, points} -> {job_id}
//   GET    /api/jobs/{id}                            JobRecord
//   DELETE /api/jobs/{id}                            cancel, returns JobRecord
//   GET    /api/volumes/{id}/mask/slice?view&index   RGBA overlay PNG
//   GET    /api/volumes/{id}/mask                    NIfTI (uint8)
//
// Errors are JSON {"error": message} with 400, 404 or 409.

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/pipeline/digest.hpp"
#include "crlm/pipeline/jobs.hpp"
#include "crlm/pipeline/png.hpp"
#include "crlm/pipeline/prompts.hpp"
#include "crlm/volgrid/io.hpp"

namespace crlm::pipeline {

class NotFound : public Error {
 public:
  using Error::Error;
};

struct ServerConfig {
  std::filesystem::path data_root = ".";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  int workers = 1;
  std::string segmenter = "region-grow";
  samonai::PropagationConfig samonai;
  std::optional<std::filesystem::path> static_dir;
};

// Volumes are read once at start-up; masks are replaced by each finished job.
class VolumeStore {
 public:
  struct Info {
    std::string id;
    Geometry geometry;
    double min = 0.0;
    double max = 0.0;
  };

  void add(const std::string& id, Volume3D v) {
    std::lock_guard lk(mu_);
    auto e = std::make_shared<Entry>();
    e->volume = std::move(v);
    const auto [lo, hi] = std::minmax_element(e->volume.buffer().begin(), e->volume.buffer().end());
    e->info = {id, e->volume.geometry(), *lo, *hi};
    entries_[id] = std::move(e);
  }

  // NIfTI (.nii, .nii.gz) and raw headers (.json with format crlm-raw);
  // the id is the file name without those suffixes.
  void load_dir(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) throw InvalidArgument("data root '" + root.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& de : std::filesystem::directory_iterator(root))
      if (de.is_regular_file()) files.push_back(de.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string name = f.filename().string();
      std::string id;
      if (crlm::detail::ends_with(name, ".nii.gz")) {
        id = name.substr(0, name.size() - 7);
      } else if (crlm::detail::ends_with(name, ".nii")) {
        id = name.substr(0, name.size() - 4);
      } else if (crlm::detail::ends_with(name, ".json")) {
        std::ifstream is(f);
        const auto j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded() || !j.is_object() || j.value("format", "") != "crlm-raw") continue;
        id = name.substr(0, name.size() - 5);
      } else {
        continue;
      }
      add(id, load_volume(f.string()));
    }
  }

  std::vector<Info> list() const {
    std::lock_guard lk(mu_);
    std::vector<Info> out;
    for (const auto& [id, e] : entries_) out.push_back(e->info);
    return out;
  }

  // Volumes are immutable once added, so the shared pointer is safe to read
  // without the lock.
  std::shared_ptr<const Volume3D> volume(const std::string& id) const {
    std::lock_guard lk(mu_);
    const auto e = find(id);
    return {e, &e->volume};
  }

  Info info(const std::string& id) const {
    std::lock_guard lk(mu_);
    return find(id)->info;
  }

  std::optional<Mask3D> mask(const std::string& id) const {
    std::lock_guard lk(mu_);
    return find(id)->mask;
  }

  void set_mask(const std::string& id, Mask3D m) {
    std::lock_guard lk(mu_);
    find(id)->mask = std::move(m);
  }

 private:
  struct Entry {
    Info info;
    Volume3D volume;
    std::optional<Mask3D> mask;
  };

  std::shared_ptr<Entry> find(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFound("no volume '" + id + "'");
    return it->second;
  }

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

class Service {
 public:
  explicit Service(ServerConfig cfg) : cfg_(std::move(cfg)), jobs_(cfg_.workers), segmenter_(make_segmenter(cfg_.segmenter)) {
    cfg_.samonai.validate();
    routes();
  }

  ~Service() { stop(); }

  VolumeStore& volumes() { return volumes_; }
  JobRegistry& jobs() { return jobs_; }
  httplib::Server& http() { return http_; }

  // Binds and returns the port (useful with port 0).
  int bind() {
    const int port = cfg_.port == 0 ? http_.bind_to_any_port(cfg_.host) : (http_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
    if (port < 0) throw IoError(IoErrorKind::write_failed, "cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port) + " (port busy?)");
    return port;
  }

  // Blocks until stop().
  void listen() { http_.listen_after_bind(); }
  void stop() {
    if (http_.is_running()) http_.stop();
  }

 private:
  static void send_error(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& fn) {
    try {
      fn();
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const Conflict& e) {
      send_error(res, 409, e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 400, e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, std::string("malformed request: ") + e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, std::string("malformed number: ") + e.what());
    } catch (const std::out_of_range& e) {
      send_error(res, 400, std::string("number out of range: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  static SliceAddress slice_param(const httplib::Request& req, const Geometry& g) {
    SliceAddress a;
    a.view = req.has_param("view") ? parse_view(req.get_param_value("view")) : View::axial;
    a.index = req.has_param("index") ? std::stoll(req.get_param_value("index")) : slice_count(g, a.view) / 2;
    check_address(g, a);
    return a;
  }

  void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  void routes() {
    http_.Get("/api/volumes", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : volumes_.list())
          out.push_back({{"id", v.id}, {"dims", v.geometry.dims}, {"spacing", v.geometry.spacing}});
        send_json(res, out);
      });
    });

    http_.Get(R"(/api/volumes/([^/]+)/slice)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const auto info = volumes_.info(id);
        const auto vol = volumes_.volume(id);
        const SliceAddress a = slice_param(req, vol->geometry());
        const double ww = req.has_param("ww") ? std::stod(req.get_param_value("ww")) : std::max(info.max - info.min, 1e-12);
        const double wl = req.has_param("wl") ? std::stod(req.get_param_value("wl")) : 0.5 * (info.max + info.min);
        res.set_content(encode_png(window_level(extract_slice(*vol, a), wl, ww)), "image/png");
      });
    });

    http_.Post(R"(/api/volumes/([^/]+)/samonai)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const auto vol = volumes_.volume(id);
        const nlohmann::json body = nlohmann::json::parse(req.body);
        if (!body.contains("points")) throw InvalidArgument("request needs 'points'");
        const SeedPrompt prompt = seed_prompt_from_json(body);
        check_address(vol->geometry(), prompt.address);
        validate_prompts(extract_slice(*vol, prompt.address), prompt.points);
        const std::string digest = sha256_hex(id + "\n" + to_json(prompt).dump());
        auto result = std::make_shared<std::optional<Mask3D>>();
        auto seg = segmenter_;
        const auto cfg = cfg_.samonai;
        const std::string job = jobs_.submit(
            "samonai", id, digest,
            [vol, prompt, seg, cfg, result, id](std::stop_token st) {
              *result = run_samonai(*vol, prompt, *seg, cfg, st);
              return nlohmann::json{{"mask", "/api/volumes/" + id + "/mask"}, {"voxels", count_nonzero(**result)}};
            },
            [this, id, result] { volumes_.set_mask(id, std::move(**result)); });
        send_json(res, {{"job_id", job}}, 202);
      });
    });

    http_.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto rec = jobs_.get(req.matches[1]);
        if (!rec) throw NotFound("no job '" + std::string(req.matches[1]) + "'");
        send_json(res, rec->to_json());
      });
    });

    http_.Delete(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto rec = jobs_.cancel(req.matches[1]);
        if (!rec) throw NotFound("no job '" + std::string(req.matches[1]) + "'");
        send_json(res, rec->to_json());
      });
    });

    http_.Get(R"(/api/volumes/([^/]+)/mask/slice)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const auto m = volumes_.mask(id);
        if (!m) throw NotFound("volume '" + id + "' has no mask yet");
        res.set_content(encode_png(mask_overlay(extract_slice(*m, slice_param(req, m->geometry())))), "image/png");
      });
    });

    http_.Get(R"(/api/volumes/([^/]+)/mask)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const auto m = volumes_.mask(id);
        if (!m) throw NotFound("volume '" + id + "' has no mask yet");
        res.set_header("Content-Disposition", "attachment; filename=\"" + id + "_mask.nii\"");
        res.set_content(encode_nifti(*m, 2), "application/octet-stream");
      });
    });

    if (cfg_.static_dir && std::filesystem::is_directory(*cfg_.static_dir)) http_.set_mount_point("/", cfg_.static_dir->string());
  }

  ServerConfig cfg_;
  VolumeStore volumes_;
  JobRegistry jobs_;
  std::shared_ptr<const Segmenter2D> segmenter_;
  httplib::Server http_;
};

}  // namespace crlm::pipeline
