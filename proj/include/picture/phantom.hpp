#ifndef PICTURE_PHANTOM_HPP
#define PICTURE_PHANTOM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "picture/elasticity.hpp"
#include "picture/signal.hpp"

namespace picture {

struct Inclusion {
    double center_a = 0.0;  // pixels
    double center_l = 0.0;  // pixels
    double radius = 0.0;    // pixels
    MaterialParams material;
    double decay_delta = 4.0;  // eigenstrain decay length, pixels
};

struct PhantomSpec {
    int rows = 128;
    int cols = 128;
    MaterialParams background{20.0, 0.49};
    std::vector<Inclusion> inclusions;
    double applied_strain = -0.01;  // axial surface strain, negative = compression
    double scatterer_density = 2.0;  // per pixel
    uint64_t seed = 0;
    double sampling_freq = 40.0;  // MHz
    double center_freq = 8.0;     // MHz

    void validate() const;  // throws std::invalid_argument

    std::string to_json() const;
    static PhantomSpec from_json(const std::string& text);
};

struct GroundTruth {
    DisplacementField displacement;
    StrainField strain;
    EprField epr_true;
};

struct ScattererField {
    std::vector<double> pos_a, pos_l;  // sub-pixel positions
    std::vector<double> amp;

    size_t size() const { return amp.size(); }
};

struct PsfSpec {
    double sampling_freq = 40.0;         // MHz
    double center_freq = 8.0;            // MHz
    double axial_sigma_wavelengths = 1.5;
    double lateral_sigma_px = 2.0;
};

// Analytic displacement/strain/EPR fields for the spec: uniaxial axial
// compression scaled by local stiffness, exponentially smoothed at
// inclusion borders, integrated from the transducer face (axial) and the
// centerline (lateral).
GroundTruth ground_truth_displacement(const PhantomSpec& spec);

// Uniform random sub-pixel scatterers with standard-normal amplitudes;
// count = round(density * pixels), reproducible from the seed.
ScattererField make_scatterers(const PhantomSpec& spec);

// Convolution speckle model: Gaussian envelope times axial cosine carrier.
RfFrame render_rf(const ScattererField& sc, const PsfSpec& psf, int rows, int cols);

struct FramePair {
    RfFrame i1, i2;
    GroundTruth gt;
};

// Pre/post-compression pair: I2 is rendered from scatterers moved by the
// ground-truth displacement sampled at their rest positions.
FramePair make_pair(const PhantomSpec& spec);

}  // namespace picture

#endif
