#include "osp/frame_types.hpp"

namespace osp {

const char* frame_class_name(FrameClass c) {
    switch (c) {
        case FrameClass::Head: return "head";
        case FrameClass::TorsoTransverse: return "torso_t";
        case FrameClass::FetusSagittal: return "fetus_sag";
        case FrameClass::Detached: return "detached";
        case FrameClass::Background: return "background";
    }
    return "?";
}

const char* presentation_name(Presentation p) {
    return p == Presentation::Cephalic ? "cephalic" : "breech";
}

}  // namespace osp
