// Command-line front end: encode, decode, inspect, pca-report, verify.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hgs/bitstream.hpp"
#include "hgs/errors.hpp"
#include "hgs/pipeline.hpp"
#include "hgs/ply_io.hpp"

namespace {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kInfeasible = 4, kCorrupt = 5 };

int exit_code(hgs::ErrorCategory c) {
  switch (c) {
    case hgs::ErrorCategory::kConfig: return kConfig;
    case hgs::ErrorCategory::kData: return kData;
    case hgs::ErrorCategory::kInfeasibleRate: return kInfeasible;
    case hgs::ErrorCategory::kCorruptStream: return kCorrupt;
  }
  return kData;
}

struct EncodeOptions {
  hgs::pipeline::EncodeConfig config;
  std::string quantizer = "rq";
  std::string outlier = "off";
  std::string attribute_mode = "raht";
  std::optional<int> bd_attr;
};

void add_encode_options(CLI::App* cmd, EncodeOptions& o) {
  auto& c = o.config;
  cmd->add_option("--bd", c.bd, "Position bit depth, also the attribute default")->capture_default_str();
  cmd->add_option("--bd-attr", o.bd_attr, "Bit depth for every attribute channel");
  cmd->add_option("--bd-c", c.bd_c, "Color latent bit depth");
  cmd->add_option("--bd-o", c.bd_o, "Opacity bit depth");
  cmd->add_option("--bd-s", c.bd_s, "Scale bit depth");
  cmd->add_option("--bd-r", c.bd_r, "Rotation latent bit depth");
  cmd->add_option("--kc", c.kc, "Color latent width")->capture_default_str();
  cmd->add_option("--kr", c.kr, "Rotation latent width")->capture_default_str();
  cmd->add_option("--quantizer", o.quantizer, "uq or rq")
      ->check(CLI::IsMember({"uq", "rq"}))
      ->capture_default_str();
  cmd->add_option("--lambda", c.lambda, "Ridge weight of the robust quantizer")->capture_default_str();
  cmd->add_option("--outlier", o.outlier, "Statistical outlier removal: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--nb-neighbors", c.nb_neighbors)->capture_default_str();
  cmd->add_option("--std-ratio", c.std_ratio)->capture_default_str();
  cmd->add_option("--target-size", c.target_bytes, "Rate budget in bytes");
  cmd->add_option("--rate-method", c.rate_method, "1: prune primitives, 2: lower attribute depths")
      ->capture_default_str();
  cmd->add_option("--L", c.lossless_ratio, "Assumed entropy-stage ratio")->capture_default_str();
  cmd->add_option("--seed", c.seed)->capture_default_str();
  cmd->add_option("--attribute-mode", o.attribute_mode, "raht or bypass")
      ->check(CLI::IsMember({"raht", "bypass"}))
      ->capture_default_str();
  cmd->add_option("--qs", c.raht_step, "RAHT coefficient step; 1 is exact")->capture_default_str();
  cmd->add_option("--latent-epochs", c.latent_epochs)->capture_default_str();
  cmd->add_option("--latent-sample", c.latent_sample)->capture_default_str();
  cmd->add_option("--refine-steps", c.refine_steps)->capture_default_str();
}

hgs::pipeline::EncodeConfig finish(EncodeOptions& o) {
  auto c = o.config;
  c.quantizer = o.quantizer == "uq" ? hgs::bitstream::QuantizerKind::kUniform
                                    : hgs::bitstream::QuantizerKind::kRobust;
  c.outlier_removal = o.outlier == "on";
  c.attribute_mode = o.attribute_mode == "bypass" ? hgs::codec::AttributeMode::kBypass
                                                  : hgs::codec::AttributeMode::kRaht;
  if (o.bd_attr) {
    for (auto* bd : {&c.bd_c, &c.bd_o, &c.bd_s, &c.bd_r}) {
      if (!*bd) *bd = *o.bd_attr;
    }
  }
  return c;
}

json report_json(const hgs::bitstream::AllocationReport& r) {
  json j;
  j["n"] = r.n;
  j["bits_per_primitive"] = r.bits_per_primitive;
  j["total_bytes"] = r.total_bytes;
  for (const auto& c : r.components) {
    json e{{"coded_bytes", c.coded_bytes}};
    if (c.precodec_bytes > 0) {
      e["precodec_bytes"] = c.precodec_bytes;
      e["precodec_mib"] = c.precodec_bytes / hgs::bitstream::kMiB;
    }
    j["components"][c.name] = e;
  }
  return j;
}

json summary_json(const hgs::pipeline::EncodeSummary& s) {
  json j{{"n_input", s.n_input},
         {"n_after_outliers", s.n_after_outliers},
         {"n_after_dedup", s.n_after_dedup},
         {"n_final", s.n_final},
         {"bits_per_primitive", s.bits_per_primitive},
         {"estimated_bytes", s.estimated_bytes},
         {"bd_reduction", s.bd_reduction},
         {"color_loss", s.color_loss},
         {"rotation_loss", s.rotation_loss},
         {"stream_bytes", s.stream_bytes},
         {"allocation", report_json(s.allocation)}};
  j["target_bytes"] = s.target_bytes ? json(*s.target_bytes) : json(nullptr);
  return j;
}

void print_summary(const hgs::pipeline::EncodeSummary& s) {
  std::cout << "primitives: " << s.n_input << " in, " << s.n_after_outliers << " after outliers, "
            << s.n_after_dedup << " unique, " << s.n_final << " coded\n";
  std::cout << "bits per primitive: " << s.bits_per_primitive << "\n";
  std::cout << "estimated size: " << s.estimated_bytes << " B";
  if (s.target_bytes) std::cout << " (target " << *s.target_bytes << " B)";
  std::cout << "\n";
  if (s.bd_reduction > 0) std::cout << "attribute depth reduction: " << s.bd_reduction << "\n";
  std::cout << "latent loss: color " << s.color_loss << ", rotation " << s.rotation_loss << "\n";
  std::cout << s.allocation.text();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hgs::IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw hgs::IoError("failed writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian splat codec"};
  app.require_subcommand(1);
  bool report = false;
  app.add_flag("--report-json", report, "Print machine-readable JSON instead of text");

  auto* encode = app.add_subcommand("encode", "Compress a 3DGS PLY into an .hgs stream");
  std::string enc_in, enc_out, enc_cams, enc_cams_out;
  EncodeOptions enc_opts;
  encode->add_option("-i,--input", enc_in, "Input PLY")->required();
  encode->add_option("-o,--output", enc_out, "Output .hgs")->required();
  encode->add_option("--cameras", enc_cams, "Camera list to move into the lattice frame");
  encode->add_option("--cameras-out", enc_cams_out, "Where the adjusted cameras go");
  add_encode_options(encode, enc_opts);

  auto* decode = app.add_subcommand("decode", "Expand an .hgs stream into a PLY");
  std::string dec_in, dec_out, dec_cams, dec_cams_out;
  bool denormalize = false;
  decode->add_option("-i,--input", dec_in, "Input .hgs")->required();
  decode->add_option("-o,--output", dec_out, "Output PLY")->required();
  decode->add_flag("--denormalize", denormalize, "Map positions and scales back to scene units");
  decode->add_option("--cameras", dec_cams, "Camera list to move into the lattice frame");
  decode->add_option("--cameras-out", dec_cams_out, "Where the adjusted cameras go");

  auto* inspect = app.add_subcommand("inspect", "Report the rate allocation of an .hgs stream");
  std::string ins_in;
  inspect->add_option("-i,--input", ins_in, "Input .hgs")->required();

  auto* pca = app.add_subcommand("pca-report", "Energy spectra of color, scale and rotation");
  std::string pca_in, pca_out;
  pca->add_option("-i,--input", pca_in, "Input PLY")->required();
  pca->add_option("-o,--output", pca_out, "CSV destination; stdout when omitted");

  auto* verify = app.add_subcommand("verify", "Encode, decode, and check the round trip");
  std::string ver_in;
  EncodeOptions ver_opts;
  verify->add_option("-i,--input", ver_in, "Input PLY")->required();
  add_encode_options(verify, ver_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*encode) {
      const auto config = finish(enc_opts);
      hgs::pipeline::validate(config);
      if (!enc_cams.empty() && enc_cams_out.empty()) {
        throw hgs::ConfigError("--cameras needs --cameras-out");
      }
      const auto cloud = hgs::ply::read_ply_file(enc_in);
      const auto result = hgs::pipeline::encode(cloud, config);
      hgs::write_file_bytes(enc_out, result.bytes);
      if (!enc_cams.empty()) {
        const auto cams = hgs::ply::read_cameras_file(enc_cams);
        hgs::ply::write_cameras_file(
            enc_cams_out, hgs::geometry::adjust_cameras(cams, result.stream.header.transform));
      }
      if (report) {
        std::cout << summary_json(result.summary).dump(2) << "\n";
      } else {
        print_summary(result.summary);
      }
    } else if (*decode) {
      if (!dec_cams.empty() && dec_cams_out.empty()) {
        throw hgs::ConfigError("--cameras needs --cameras-out");
      }
      const auto bytes = hgs::read_file_bytes(dec_in);
      const auto result = hgs::pipeline::decode(bytes, {denormalize});
      hgs::ply::write_ply_file(dec_out, result.cloud);
      if (!dec_cams.empty()) {
        const auto cams = hgs::ply::read_cameras_file(dec_cams);
        hgs::ply::write_cameras_file(dec_cams_out,
                                     hgs::geometry::adjust_cameras(cams, result.transform));
      }
      const auto& t = result.transform;
      if (report) {
        json j{{"n", result.cloud.size()},
               {"denormalized", denormalize},
               {"transform",
                {{"center", t.center}, {"scale", t.scale}, {"bit_depth", t.bit_depth}}}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "decoded " << result.cloud.size() << " primitives"
                  << (denormalize ? " (scene units)" : " (lattice units)") << "\n";
      }
    } else if (*inspect) {
      const auto bytes = hgs::read_file_bytes(ins_in);
      const auto r = hgs::bitstream::inspect(bytes);
      if (report) {
        std::cout << report_json(r).dump(2) << "\n";
      } else {
        std::cout << r.text() << "\n" << r.key_values();
      }
    } else if (*pca) {
      const auto r = hgs::pipeline::pca_report(hgs::ply::read_ply_file(pca_in));
      if (report) {
        std::cout << json{{"color", r.color}, {"scale", r.scale}, {"rotation", r.rotation}}.dump(2)
                  << "\n";
      } else if (pca_out.empty()) {
        std::cout << r.csv();
      } else {
        write_text(pca_out, r.csv());
      }
    } else if (*verify) {
      const auto config = finish(ver_opts);
      const auto r = hgs::pipeline::verify(hgs::ply::read_ply_file(ver_in), config);
      if (report) {
        std::cout << json{{"ok", r.ok},
                          {"failures", r.failures},
                          {"max_color_error", r.max_color_error},
                          {"max_opacity_error", r.max_opacity_error},
                          {"max_scale_error", r.max_scale_error},
                          {"max_rotation_error", r.max_rotation_error}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << (r.ok ? "round trip OK" : "round trip FAILED") << "\n";
        for (const auto& f : r.failures) std::cout << "  " << f << "\n";
        std::cout << "max abs error: color " << r.max_color_error << ", opacity "
                  << r.max_opacity_error << ", scale " << r.max_scale_error << ", rotation "
                  << r.max_rotation_error << "\n";
      }
      if (!r.ok) return kData;
    }
  } catch (const hgs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
