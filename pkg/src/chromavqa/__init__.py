"""Chroma-aware full-reference video quality toolkit.

Feature extraction on luma and chroma planes (multiscale information
fidelity, detail-loss metrics, motion), classic metrics (PSNR family, SSIM,
MS-SSIM), SVR-based feature fusion, subjective score processing, correlation
statistics, and rate-distortion utilities, plus a CLI wrapping the pipeline.
"""

from .adm import (AdmConfig, AdmScores, DEFAULT_ADM_CONFIG,
                  QuantizedChromaFeatures, adm_multiscale,
                  chroma_adm_features, quantize_feature)
from .descriptors import (ContentDescriptors, colorfulness, motion_ti,
                          si_ti_cf, spatial_information, temporal_information)
from .evaluation import (EvalReport, LogisticFit, evaluate_datasets,
                         fisher_overall, pearson, plcc_logistic,
                         significance_matrix, srocc)
from .fusion import (FEATURE_NAMES, FeatureVector, SvrConfig, SvrModel,
                     TrainingSet, extract_feature_vector, grid_search,
                     load_model, normalize, pool_features, predict,
                     save_model, train_svr)
from .metrics import (ChannelWeights, PsnrReport, ms_ssim_plane, psnr_family,
                      psnr_k11, psnr_plane, ssim_plane)
from .rd_tools import (MonotonicityReport, QpParams, RdCurve, RdPoint,
                       bd_rate, chroma_qp, monotonicity_check, qp_i_to_qp_c)
from .subjective import (MosReport, ScoreMatrix, bt500_reject, compute_mos,
                         process_scores, zscore_by_session)
from .video_io import (PlaneBuffer, RgbFrame, VideoFormatError, VideoSequence,
                       Yuv420Frame, degrade_chroma, degrade_chroma_sequence,
                       read_raw_yuv, read_y4m, write_raw_yuv, yuv420_to_rgb444)
from .vif import DEFAULT_VIF_CONFIG, VifConfig, VifScores, vif_multiscale

__version__ = "0.1.0"
