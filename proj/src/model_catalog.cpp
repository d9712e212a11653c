#include <array>
#include <string>

#include "model_impl.hpp"

namespace epiident {

std::span<const Model* const> model_catalog() {
  static const std::array<const Model*, 7> catalog{
      &detail::sirs_model(),           &detail::sir_model(),
      &detail::sirs_extended_model(),  &detail::sir_demography_model(),
      &detail::sirv_model(),           &detail::sir_incidence_model(),
      &detail::siv_demography_model(),
  };
  return catalog;
}

const Model& model_by_id(ModelId id) {
  if (id == ModelId::SirScaled) return detail::sir_scaled_model();
  for (const Model* m : model_catalog()) {
    if (m->id() == id) return *m;
  }
  throw Error(ErrorKind::BadArgs, "unknown model id");
}

const Model& model_by_name(std::string_view name) {
  for (const Model* m : model_catalog()) {
    if (m->name() == name) return *m;
  }
  throw Error(ErrorKind::BadArgs, "unknown model '" + std::string(name) + "'");
}

std::string_view model_name(ModelId id) { return model_by_id(id).name(); }

}  // namespace epiident
