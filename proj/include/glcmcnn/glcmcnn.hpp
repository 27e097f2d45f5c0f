#ifndef GLCMCNN_GLCMCNN_HPP
#define GLCMCNN_GLCMCNN_HPP

#include "dataset.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "glcm.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "net.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "tensor.hpp"

#endif // GLCMCNN_GLCMCNN_HPP
