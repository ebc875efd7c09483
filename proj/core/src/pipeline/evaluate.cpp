#include "fisheyex/pipeline/evaluate.hpp"

#include <numeric>

#include <fmt/core.h>

#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/parallel.hpp"

namespace fs = std::filesystem;

namespace fisheyex::pipeline {

EvalReport evaluate(const fs::path& pred_dir, const Manifest& manifest, const std::string& split) {
  std::vector<std::size_t> idx;
  if (split.empty()) {
    idx.resize(manifest.samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    idx = manifest.indices(split);
  }
  if (idx.empty()) fail(ErrorCode::missing_data, "no samples to evaluate");
  for (std::size_t i : idx) {
    const fs::path p = pred_dir / (manifest.samples[i].id + ".png");
    if (!fs::exists(p)) fail(ErrorCode::missing_data, "missing prediction " + p.string());
  }

  EvalReport report;
  report.samples.resize(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) {
    const std::string& id = manifest.samples[idx[k]].id;
    const SampleData d = load_sample(manifest, idx[k], kGroundTruth | kMask);
    const ImageBuffer pred = read_image(pred_dir / (id + ".png"), true);
    SampleScores& s = report.samples[k];
    s.id = id;
    s.psnr = psnr(pred, d.gt);
    s.ssim = ssim(pred, d.gt);
    s.fill_psnr = masked_psnr(pred, d.gt, d.mask);
    s.fill_ssim = masked_ssim(pred, d.gt, d.mask);
    const fs::path level = pred_dir / (id + "_level.rtf");
    if (fs::exists(level)) {
      s.symmetry = symmetry_metrics(read_tensor_image(level), {manifest.grid.center_x, manifest.grid.center_y});
    }
  });

  const double n = static_cast<double>(idx.size());
  double psnr_sum = 0, ssim_sum = 0, fill_psnr_sum = 0, fill_ssim_sum = 0, hs = 0, vs = 0, cs = 0;
  std::size_t n_sym = 0;
  for (const SampleScores& s : report.samples) {
    psnr_sum += s.psnr;
    ssim_sum += s.ssim;
    fill_psnr_sum += s.fill_psnr;
    fill_ssim_sum += s.fill_ssim;
    if (s.symmetry) {
      hs += s.symmetry->m_hs;
      vs += s.symmetry->m_vs;
      cs += s.symmetry->m_cs;
      ++n_sym;
    }
  }
  report.mean.add("psnr", psnr_sum / n);
  report.mean.add("ssim", ssim_sum / n);
  report.mean.add("fill_psnr", fill_psnr_sum / n);
  report.mean.add("fill_ssim", fill_ssim_sum / n);
  if (n_sym > 0) {
    report.mean.add("m_hs", hs / n_sym);
    report.mean.add("m_vs", vs / n_sym);
    report.mean.add("m_cs", cs / n_sym);
  }
  report.mean.add("samples", n);
  return report;
}

std::string EvalReport::to_text() const {
  std::string out = "id\tpsnr\tssim\tfill_psnr\tfill_ssim\tm_hs\tm_vs\tm_cs\n";
  for (const SampleScores& s : samples) {
    out += fmt::format("{}\t{:.4f}\t{:.4f}\t{:.4f}\t{:.4f}", s.id, s.psnr, s.ssim, s.fill_psnr, s.fill_ssim);
    if (s.symmetry) {
      out += fmt::format("\t{:.6g}\t{:.6g}\t{:.6g}\n", s.symmetry->m_hs, s.symmetry->m_vs, s.symmetry->m_cs);
    } else {
      out += "\t-\t-\t-\n";
    }
  }
  out += "mean\n" + mean.to_text();
  return out;
}

std::string EvalReport::to_key_value() const {
  std::string out;
  for (const SampleScores& s : samples) {
    out += fmt::format("{0}.psnr={1}\n{0}.ssim={2}\n{0}.fill_psnr={3}\n{0}.fill_ssim={4}\n", s.id, s.psnr, s.ssim,
                       s.fill_psnr, s.fill_ssim);
    if (s.symmetry) {
      out += fmt::format("{0}.m_hs={1}\n{0}.m_vs={2}\n{0}.m_cs={3}\n", s.id, s.symmetry->m_hs, s.symmetry->m_vs,
                         s.symmetry->m_cs);
    }
  }
  for (const auto& [key, value] : mean.values()) out += fmt::format("mean.{}={}\n", key, value);
  return out;
}

}  // namespace fisheyex::pipeline
