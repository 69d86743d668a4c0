#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Confusion matrix, the accuracy / detection-rate / false-alarm-rate metric
// triple, ROC curve, AUC and the threshold sweep. Positive class = accident
// = 1 throughout; classification rule is score >= threshold everywhere.
//
// Note the false alarm rate divides by ALL cases, not by the negatives; the
// reported percentages are only reproducible with that denominator.

namespace accdet {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
};

struct RocPoint {
    double false_positive_rate = 0.0;  // fp / (fp + tn)
    double true_positive_rate = 0.0;   // tp / (tp + fn)
    double threshold = 0.0;
};

struct ThresholdMetrics {
    double threshold = 0.0;
    double accuracy = 0.0;
    double detection_rate = 0.0;
    double false_alarm_rate = 0.0;
    ConfusionMatrix confusion;
};

struct EvalReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double detection_rate = 0.0;
    double false_alarm_rate = 0.0;
    double auc = 0.0;
    std::vector<RocPoint> roc;
    double threshold = 0.0;  // decision threshold the confusion was taken at
};

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

double accuracy(const ConfusionMatrix& cm);          // (tp+tn)/total * 100
double detection_rate(const ConfusionMatrix& cm);    // tp/(tp+fn) * 100
double false_alarm_rate(const ConfusionMatrix& cm);  // fp/total * 100

// One point per distinct score threshold plus the (0,0) endpoint; sorted by
// descending threshold, so both rates are non-decreasing along the curve and
// the last point is (1,1). Requires both classes present.
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area over FPR; equals the Mann-Whitney pair statistic.
double auc(const std::vector<RocPoint>& roc);

struct SweepResult {
    double best_threshold = 0.0;
    std::vector<ThresholdMetrics> table;
};

// Evaluates the metric triple at every grid threshold and returns the argmax
// of (detection_rate - false_alarm_rate); ties go to the lower threshold.
SweepResult threshold_sweep(const std::vector<double>& scores, const std::vector<int>& labels,
                            const std::vector<double>& grid);

// Confusion at the given threshold plus ROC/AUC over the scores.
EvalReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& labels,
                           double threshold);

// metric,value rows (threshold, confusion cells, the metric triple, AUC).
void write_metrics_csv(const EvalReport& report, const std::string& path);
// threshold,fpr,tpr rows.
void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path);

std::vector<double> default_threshold_grid();  // 0.01 .. 0.99 step 0.01

}  // namespace accdet
